//! Regressor signals, the linear regression measurement model, and the
//! dynamic regressor extension and mixing (DREM) transform.
//!
//! DREM stacks the last `d` regressors of a sensor into a square matrix
//! `Phi` and premultiplies the stacked measurements by `adj(Phi)`. Because
//! `adj(Phi) * Phi = det(Phi) * I`, every entry of the mixed measurement
//! vector obeys its own scalar equation `y_bar[l] = delta * theta[l]` with
//! `delta = det(Phi)`.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::Deref;

use crate::error::{Error, Result};

/// The unknown parameter `theta`: a nonempty vector of finite reals.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterVector(Vec<f64>);

impl ParameterVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidArgument(
                "parameter vector must have d >= 1".into(),
            ));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "parameter entries must be finite".into(),
            ));
        }
        Ok(ParameterVector(entries))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for ParameterVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Noiseless scalar measurement `theta' * phi`.
pub fn measure(theta: &ParameterVector, phi: &[f64]) -> Result<f64> {
    if phi.len() != theta.dim() {
        return Err(Error::DimensionMismatch {
            expected: theta.dim(),
            found: phi.len(),
        });
    }
    Ok(dot(theta, phi))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Dense square matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(dim: usize) -> Self {
        SquareMatrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::InvalidArgument("matrix must be at least 1x1".into()));
        }
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(SquareMatrix { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.dim + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.dim + col] = value;
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.dim..(row + 1) * self.dim]
    }

    pub fn mul(&self, other: &SquareMatrix) -> Result<SquareMatrix> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let mut out = SquareMatrix::zeros(self.dim);
        for r in 0..self.dim {
            for c in 0..self.dim {
                let v = (0..self.dim)
                    .map(|k| self.get(r, k) * other.get(k, c))
                    .sum();
                out.set(r, c, v);
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: v.len(),
            });
        }
        Ok((0..self.dim).map(|r| dot(self.row(r), v)).collect())
    }

    /// Determinant by cofactor (Laplace) expansion.
    pub fn determinant(&self) -> f64 {
        let idx: Vec<usize> = (0..self.dim).collect();
        self.sub_determinant(&idx, &idx)
    }

    /// Determinant by Gaussian elimination with partial pivoting.
    pub fn determinant_by_elimination(&self) -> f64 {
        let n = self.dim;
        let mut a = self.data.clone();
        let mut det = 1.0;
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&x, &y| libm::fabs(a[x * n + col]).total_cmp(&libm::fabs(a[y * n + col])))
                .unwrap_or(col);
            if a[pivot * n + col] == 0.0 {
                return 0.0;
            }
            if pivot != col {
                for k in 0..n {
                    a.swap(pivot * n + k, col * n + k);
                }
                det = -det;
            }
            let p = a[col * n + col];
            det *= p;
            for r in col + 1..n {
                let factor = a[r * n + col] / p;
                if factor != 0.0 {
                    for k in col..n {
                        a[r * n + k] -= factor * a[col * n + k];
                    }
                }
            }
        }
        det
    }

    /// Adjugate (transposed cofactor matrix), exact in structure for singular inputs.
    ///
    /// The 1x1 adjugate is `[1]`.
    pub fn adjugate(&self) -> SquareMatrix {
        let n = self.dim;
        let mut adj = SquareMatrix::zeros(n);
        let all: Vec<usize> = (0..n).collect();
        for r in 0..n {
            let rows: Vec<usize> = all.iter().copied().filter(|&x| x != r).collect();
            for c in 0..n {
                let cols: Vec<usize> = all.iter().copied().filter(|&x| x != c).collect();
                let minor = self.sub_determinant(&rows, &cols);
                let cofactor = if (r + c) % 2 == 0 { minor } else { -minor };
                adj.set(c, r, cofactor);
            }
        }
        adj
    }

    // Laplace expansion along the first listed row of the submatrix picked
    // out by `rows` x `cols`. The empty submatrix has determinant 1.
    fn sub_determinant(&self, rows: &[usize], cols: &[usize]) -> f64 {
        match rows.len() {
            0 => 1.0,
            1 => self.get(rows[0], cols[0]),
            2 => {
                self.get(rows[0], cols[0]) * self.get(rows[1], cols[1])
                    - self.get(rows[0], cols[1]) * self.get(rows[1], cols[0])
            }
            _ => {
                let (top, rest) = (rows[0], &rows[1..]);
                let mut sub_cols = Vec::with_capacity(cols.len() - 1);
                let mut det = 0.0;
                for (k, &c) in cols.iter().enumerate() {
                    let entry = self.get(top, c);
                    if entry == 0.0 {
                        continue;
                    }
                    sub_cols.clear();
                    sub_cols.extend(cols.iter().copied().filter(|&x| x != c));
                    let term = entry * self.sub_determinant(rest, &sub_cols);
                    if k % 2 == 0 {
                        det += term;
                    } else {
                        det -= term;
                    }
                }
                det
            }
        }
    }
}

/// Adjugate of a square matrix.
pub fn adjugate(m: &SquareMatrix) -> SquareMatrix {
    m.adjugate()
}

/// How a normal sensor's regressor evolves over rounds.
#[derive(Debug, Clone, PartialEq)]
pub enum RegressorKind {
    /// The same vector every round.
    Constant { value: Vec<f64> },
    /// `odd` at odd rounds, `even` at even rounds.
    Alternating { odd: Vec<f64>, even: Vec<f64> },
    /// `base` with entry `entry` replaced by `a(t)`, where
    /// `a(0) = initial` and `a(t) = a(t-1) + cos(t * step_over_pi * pi)`.
    RecursiveCosine {
        base: Vec<f64>,
        entry: usize,
        initial: f64,
        step_over_pi: f64,
    },
    /// Rows cycled with period `rows.len()`.
    Table { rows: Vec<Vec<f64>> },
}

impl RegressorKind {
    /// Checks internal consistency and returns the regressor dimension.
    pub fn dim(&self) -> Result<usize> {
        let check = |v: &[f64]| -> Result<()> {
            if v.iter().all(|x| x.is_finite()) {
                Ok(())
            } else {
                Err(Error::InvalidArgument(
                    "regressor entries must be finite".into(),
                ))
            }
        };
        match self {
            RegressorKind::Constant { value } => {
                check(value)?;
                nonzero_dim(value.len())
            }
            RegressorKind::Alternating { odd, even } => {
                check(odd)?;
                check(even)?;
                if odd.len() != even.len() {
                    return Err(Error::DimensionMismatch {
                        expected: odd.len(),
                        found: even.len(),
                    });
                }
                nonzero_dim(odd.len())
            }
            RegressorKind::RecursiveCosine {
                base,
                entry,
                initial,
                step_over_pi,
            } => {
                check(base)?;
                check(&[*initial, *step_over_pi])?;
                if *entry >= base.len() {
                    return Err(Error::InvalidArgument(format!(
                        "recursive entry {entry} is outside a regressor of length {}",
                        base.len()
                    )));
                }
                nonzero_dim(base.len())
            }
            RegressorKind::Table { rows } => {
                let first = rows.first().ok_or_else(|| {
                    Error::InvalidArgument("regressor table must have at least one row".into())
                })?;
                for row in rows {
                    check(row)?;
                    if row.len() != first.len() {
                        return Err(Error::DimensionMismatch {
                            expected: first.len(),
                            found: row.len(),
                        });
                    }
                }
                nonzero_dim(first.len())
            }
        }
    }
}

fn nonzero_dim(d: usize) -> Result<usize> {
    if d == 0 {
        Err(Error::InvalidArgument("regressor must have d >= 1".into()))
    } else {
        Ok(d)
    }
}

/// A regressor generator with memoized recursion state.
///
/// Requests for increasing rounds advance the recursion incrementally; a
/// request for an earlier round replays from `t = 0`. Both paths execute the
/// same sequence of floating-point operations, so results are bit-identical.
#[derive(Debug, Clone)]
pub struct RegressorSource {
    kind: RegressorKind,
    memo: Option<(u64, f64)>,
}

impl RegressorSource {
    pub fn new(kind: RegressorKind) -> Self {
        RegressorSource { kind, memo: None }
    }

    pub fn kind(&self) -> &RegressorKind {
        &self.kind
    }

    pub fn at(&mut self, k: u64) -> Vec<f64> {
        match &self.kind {
            RegressorKind::Constant { value } => value.clone(),
            RegressorKind::Alternating { odd, even } => {
                if k % 2 == 1 {
                    odd.clone()
                } else {
                    even.clone()
                }
            }
            RegressorKind::RecursiveCosine {
                base,
                entry,
                initial,
                step_over_pi,
            } => {
                let (mut t, mut a) = match self.memo {
                    Some((t, a)) if t <= k => (t, a),
                    _ => (0, *initial),
                };
                let step = PI * step_over_pi;
                while t < k {
                    t += 1;
                    a += libm::cos(t as f64 * step);
                }
                self.memo = Some((t, a));
                let mut phi = base.clone();
                phi[*entry] = a;
                phi
            }
            RegressorKind::Table { rows } => rows[(k % rows.len() as u64) as usize].clone(),
        }
    }
}

/// Evaluates a regressor kind at round `k` from scratch.
pub fn regressor_at(kind: &RegressorKind, k: u64) -> Vec<f64> {
    RegressorSource::new(kind.clone()).at(k)
}

/// The last `d` (regressor, measurement) pairs of one sensor, newest first.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressorWindow {
    capacity: usize,
    slots: VecDeque<(Vec<f64>, f64)>,
}

impl RegressorWindow {
    pub fn new(d: usize) -> Self {
        RegressorWindow {
            capacity: d,
            slots: VecDeque::with_capacity(d),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.slots.len() == self.capacity
    }

    /// Pushes the newest pair, evicting the oldest once `d` pairs are held.
    pub fn push(&mut self, phi: Vec<f64>, y: f64) -> Result<()> {
        if phi.len() != self.capacity {
            return Err(Error::DimensionMismatch {
                expected: self.capacity,
                found: phi.len(),
            });
        }
        if self.slots.len() == self.capacity {
            self.slots.pop_back();
        }
        self.slots.push_front((phi, y));
        Ok(())
    }

    /// Row `q` holds the pair from `q` rounds ago.
    pub fn rows(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.slots.iter().map(|(phi, y)| (phi.as_slice(), *y))
    }
}

/// The DREM quantities of one sensor at one round.
#[derive(Debug, Clone, PartialEq)]
pub struct DremTriple {
    pub phi_matrix: SquareMatrix,
    pub y_bar: Vec<f64>,
    pub delta: f64,
}

/// Builds `Phi`, `delta = det(Phi)` and `y_bar = adj(Phi) * [y(k), .., y(k-d+1)]`.
///
/// Missing rows of an underfull window are zero, which makes `delta = 0`.
// The adjugate is taken of `Phi` at the current round, the same round as the
// newest stacked measurement; any other round breaks the scalar equations.
pub fn drem_transform(window: &RegressorWindow) -> DremTriple {
    let d = window.capacity();
    let mut phi_matrix = SquareMatrix::zeros(d);
    let mut stacked = vec![0.0; d];
    for (q, (phi, y)) in window.rows().enumerate() {
        for (c, &v) in phi.iter().enumerate() {
            phi_matrix.set(q, c, v);
        }
        stacked[q] = y;
    }
    let delta = phi_matrix.determinant();
    let y_bar = phi_matrix
        .adjugate()
        .mul_vec(&stacked)
        .expect("adjugate and stack share the window dimension");
    DremTriple {
        phi_matrix,
        y_bar,
        delta,
    }
}

/// Minimum over all full windows of `sum(delta(t)^2)` across `t_window` consecutive rounds.
pub fn pe_margin(deltas: &[f64], t_window: usize) -> Result<f64> {
    if t_window == 0 {
        return Err(Error::InvalidArgument("PE window must be positive".into()));
    }
    if deltas.len() < t_window {
        return Err(Error::WindowTooShort {
            len: deltas.len(),
            window: t_window,
        });
    }
    Ok(deltas
        .windows(t_window)
        .map(|w| w.iter().map(|d| d * d).sum::<f64>())
        .fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn theta(v: &[f64]) -> ParameterVector {
        ParameterVector::new(v.to_vec()).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        libm::fabs(a - b) <= tol * b.abs().max(1.0)
    }

    #[test]
    fn measurement_examples() {
        assert_eq!(measure(&theta(&[2.5, -1.0]), &[1.0, 1.0]).unwrap(), 1.5);
        assert_eq!(measure(&theta(&[2.5, -1.0]), &[2.0, 3.0]).unwrap(), 2.0);
        assert_eq!(measure(&theta(&[7.0, -3.0, 1.0]), &[0.0; 3]).unwrap(), 0.0);
        assert_eq!(
            measure(&theta(&[1.0]), &[1.0, 2.0]),
            Err(Error::DimensionMismatch {
                expected: 1,
                found: 2
            })
        );
    }

    #[test]
    fn parameter_vector_rejects_bad_entries() {
        assert!(ParameterVector::new(vec![]).is_err());
        assert!(ParameterVector::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn adjugate_of_2x2() {
        let m = SquareMatrix::from_rows(&[[2.0, 3.0], [1.0, 2.0]]).unwrap();
        let adj = adjugate(&m);
        assert_eq!(
            adj,
            SquareMatrix::from_rows(&[[2.0, -3.0], [-1.0, 2.0]]).unwrap()
        );
        let prod = m.mul(&adj).unwrap();
        assert_eq!(prod, SquareMatrix::identity(2));
    }

    #[test]
    fn adjugate_of_identity_and_1x1() {
        assert_eq!(
            SquareMatrix::identity(3).adjugate(),
            SquareMatrix::identity(3)
        );
        let one = SquareMatrix::from_rows(&[[5.0]]).unwrap();
        assert_eq!(one.adjugate(), SquareMatrix::identity(1));
    }

    #[test]
    fn adjugate_of_singular_matrix() {
        let m = SquareMatrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]).unwrap();
        let adj = m.adjugate();
        assert_eq!(
            adj,
            SquareMatrix::from_rows(&[[4.0, -2.0], [-2.0, 1.0]]).unwrap()
        );
        assert_eq!(m.mul(&adj).unwrap(), SquareMatrix::zeros(2));
        assert_eq!(m.determinant(), 0.0);
    }

    #[test]
    fn adjugate_of_3x3_matches_hand_cofactors() {
        // adj([[1,2,3],[0,1,4],[5,6,0]]) is the textbook [[-24,18,5],[20,-15,-4],[-5,4,1]].
        let m =
            SquareMatrix::from_rows(&[[1.0, 2.0, 3.0], [0.0, 1.0, 4.0], [5.0, 6.0, 0.0]]).unwrap();
        let expected =
            SquareMatrix::from_rows(&[[-24.0, 18.0, 5.0], [20.0, -15.0, -4.0], [-5.0, 4.0, 1.0]])
                .unwrap();
        assert_eq!(m.adjugate(), expected);
        assert_eq!(m.determinant(), 1.0);
    }

    #[test]
    fn drem_scalar_case() {
        let mut w = RegressorWindow::new(1);
        w.push(vec![3.0], 7.5).unwrap();
        let t = drem_transform(&w);
        assert_eq!(t.delta, 3.0);
        assert_eq!(t.y_bar, vec![7.5]);
        assert_eq!(t.y_bar[0], t.delta * 2.5);
    }

    #[test]
    fn drem_alternating_sensor() {
        // Newest row phi(k) = [2, 3] (k even), then phi(k-1) = [1, 2];
        // y stack is [2, 0.5] under theta = [2.5, -1].
        let th = theta(&[2.5, -1.0]);
        let mut w = RegressorWindow::new(2);
        for phi in [vec![1.0, 2.0], vec![2.0, 3.0]] {
            let y = measure(&th, &phi).unwrap();
            w.push(phi, y).unwrap();
        }
        let t = drem_transform(&w);
        assert_eq!(t.delta, 1.0);
        assert_eq!(t.y_bar, vec![2.5, -1.0]);
    }

    #[test]
    fn drem_underfull_window_is_inert() {
        let th = theta(&[2.5, -1.0, 4.0]);
        let mut w = RegressorWindow::new(3);
        let phi = vec![1.0, 2.0, 3.0];
        w.push(phi.clone(), measure(&th, &phi).unwrap()).unwrap();
        let t = drem_transform(&w);
        assert_eq!(t.delta, 0.0);
        for (l, y) in t.y_bar.iter().enumerate() {
            assert_eq!(*y, t.delta * th[l]);
        }
    }

    #[test]
    fn window_keeps_newest_first() {
        let mut w = RegressorWindow::new(2);
        w.push(vec![1.0, 0.0], 1.0).unwrap();
        w.push(vec![2.0, 0.0], 2.0).unwrap();
        w.push(vec![3.0, 0.0], 3.0).unwrap();
        let ys: Vec<f64> = w.rows().map(|(_, y)| y).collect();
        assert_eq!(ys, vec![3.0, 2.0]);
        assert!(w.push(vec![1.0], 0.0).is_err());
    }

    #[test]
    fn pe_margin_examples() {
        assert_eq!(pe_margin(&[1.0, 1.0, 1.0, 1.0], 2).unwrap(), 2.0);
        assert_eq!(pe_margin(&[0.0; 4], 3).unwrap(), 0.0);
        assert_eq!(
            pe_margin(&[1.0], 2),
            Err(Error::WindowTooShort { len: 1, window: 2 })
        );
        assert!(pe_margin(&[1.0], 0).is_err());
    }

    #[test]
    fn pe_margin_of_alternating_sensor() {
        let kind = RegressorKind::Alternating {
            odd: vec![1.0, 2.0],
            even: vec![2.0, 3.0],
        };
        let th = theta(&[2.5, -1.0]);
        let mut src = RegressorSource::new(kind);
        let mut w = RegressorWindow::new(2);
        let mut deltas = Vec::new();
        for k in 0..20 {
            let phi = src.at(k);
            let y = measure(&th, &phi).unwrap();
            w.push(phi, y).unwrap();
            deltas.push(drem_transform(&w).delta);
        }
        // Round 0 is warm-up (one row only); afterwards delta alternates +-1.
        assert_eq!(deltas[0], 0.0);
        assert!(deltas[1..].iter().all(|d| d.abs() == 1.0));
        assert_eq!(pe_margin(&deltas[1..], 2).unwrap(), 2.0);
    }

    #[test]
    fn regressor_examples() {
        let c = RegressorKind::Constant {
            value: vec![1.0, 0.0],
        };
        assert_eq!(regressor_at(&c, 0), vec![1.0, 0.0]);
        assert_eq!(regressor_at(&c, 99), vec![1.0, 0.0]);

        let alt = RegressorKind::Alternating {
            odd: vec![1.0, 2.0],
            even: vec![2.0, 3.0],
        };
        assert_eq!(regressor_at(&alt, 3), vec![1.0, 2.0]);
        assert_eq!(regressor_at(&alt, 4), vec![2.0, 3.0]);

        let rc = RegressorKind::RecursiveCosine {
            base: vec![0.0, 1.0],
            entry: 0,
            initial: 1.0,
            step_over_pi: 0.25,
        };
        assert_eq!(regressor_at(&rc, 0), vec![1.0, 1.0]);
        let a1 = regressor_at(&rc, 1)[0];
        assert!(close(a1, 1.0 + core::f64::consts::FRAC_1_SQRT_2, 1e-15));
        assert!(close(a1, 1.707_106_781_186_547_5, 1e-15));

        let table = RegressorKind::Table {
            rows: vec![vec![1.0], vec![2.0], vec![3.0]],
        };
        assert_eq!(regressor_at(&table, 4), vec![2.0]);
    }

    #[test]
    fn recursive_regressor_replay_is_bit_identical() {
        let rc = RegressorKind::RecursiveCosine {
            base: vec![1.0, 0.0],
            entry: 1,
            initial: 2.0,
            step_over_pi: 0.5,
        };
        let mut src = RegressorSource::new(rc.clone());
        let incremental: Vec<Vec<f64>> = (0..50).map(|k| src.at(k)).collect();
        for k in (0..50).rev() {
            assert_eq!(src.at(k), incremental[k as usize]);
            assert_eq!(regressor_at(&rc, k), incremental[k as usize]);
        }
    }

    #[test]
    fn regressor_kind_validation() {
        assert!(RegressorKind::Constant { value: vec![] }.dim().is_err());
        assert!(RegressorKind::Alternating {
            odd: vec![1.0],
            even: vec![1.0, 2.0]
        }
        .dim()
        .is_err());
        assert!(RegressorKind::RecursiveCosine {
            base: vec![1.0],
            entry: 1,
            initial: 0.0,
            step_over_pi: 0.25
        }
        .dim()
        .is_err());
        assert!(RegressorKind::Table { rows: vec![] }.dim().is_err());
        assert_eq!(
            RegressorKind::Table {
                rows: vec![vec![1.0, 2.0]]
            }
            .dim(),
            Ok(2)
        );
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_matrix(max_dim: usize) -> impl Strategy<Value = SquareMatrix> {
            (1..=max_dim).prop_flat_map(|d| {
                proptest::collection::vec(-3.0f64..3.0, d * d).prop_map(move |data| {
                    let rows: Vec<Vec<f64>> = data.chunks(d).map(|c| c.to_vec()).collect();
                    SquareMatrix::from_rows(&rows).unwrap()
                })
            })
        }

        proptest! {
            #[test]
            fn determinant_routes_agree(m in arb_matrix(6)) {
                let a = m.determinant();
                let b = m.determinant_by_elimination();
                let scale = a.abs().max(b.abs()).max(1.0);
                prop_assert!((a - b).abs() <= 1e-9 * scale, "{} vs {}", a, b);
            }

            #[test]
            fn adjugate_identity_holds(m in arb_matrix(5), rank_drop in any::<bool>()) {
                let mut m = m;
                let d = m.dim();
                if rank_drop && d > 1 {
                    // Duplicate a row to force a singular matrix.
                    for c in 0..d {
                        let v = m.get(0, c);
                        m.set(d - 1, c, v);
                    }
                }
                let det = m.determinant();
                let prod = m.mul(&m.adjugate()).unwrap();
                for r in 0..d {
                    for c in 0..d {
                        let want = if r == c { det } else { 0.0 };
                        prop_assert!((prod.get(r, c) - want).abs() <= 1e-9 * want.abs().max(1.0));
                    }
                }
            }
        }
    }
}
