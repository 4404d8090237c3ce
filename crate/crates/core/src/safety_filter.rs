//! Minimal-intervention CBF-QP:
//!
//! ```text
//! min ½‖u − u_ref‖²_W   s.t.   a_i·u ≥ b_i,   lo ≤ u ≤ hi
//! ```
//!
//! with `a_i = L_g h_i` and `b_i = −(L_f h_i + κ(h_i))`. `W` is diagonal and
//! defaults to the identity.
//!
//! The multi-constraint solver is the Goldfarb–Idnani dual active-set method
//! specialised to a diagonal Hessian. It starts from the unconstrained
//! minimiser `u_ref`, so it needs no feasible starting point, and it detects
//! infeasibility when a violated constraint is linearly dependent on the
//! active set with no multiplier left to trade.

use crate::barriers::{evaluate, BarrierError, BarrierEval, BarrierKind};
use crate::obstacles::Obstacle;
use crate::vehicle_models::{Vehicle, VehicleState};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MAX_PIVOTS: usize = 1000;
pub const MAX_CONSTRAINTS: usize = 32;
pub const MAX_INPUTS: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FilterError {
    #[error("constraint has zero normal and positive right-hand side {b}")]
    DegenerateConstraint { b: f64 },
    #[error("active-set solver exceeded {0} pivots")]
    IterationLimit(usize),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid problem: {0}")]
    Invalid(String),
    #[error(transparent)]
    Barrier(#[from] BarrierError),
}

/// Linear class-K function `κ(h) = γh`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassK {
    pub gamma: f64,
}

impl Default for ClassK {
    fn default() -> Self {
        Self { gamma: 1.0 }
    }
}

pub fn kappa(k: ClassK, h: f64) -> f64 {
    k.gamma * h
}

/// `a·u ≥ b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub a: Vec<f64>,
    pub b: f64,
}

impl LinearConstraint {
    pub fn slack(&self, u: &[f64]) -> f64 {
        dot(&self.a, u) - self.b
    }

    fn is_degenerate(&self) -> bool {
        self.a.iter().all(|&x| x == 0.0)
    }
}

pub fn constraint_from_barrier(e: &BarrierEval, k: ClassK) -> LinearConstraint {
    LinearConstraint {
        a: e.lgh.clone(),
        b: -(e.lfh + kappa(k, e.h)),
    }
}

/// Per-component box; `None` means unbounded on that side.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Bound {
    pub lo: Option<f64>,
    pub hi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FilterProblem {
    pub u_ref: Vec<f64>,
    pub constraints: Vec<LinearConstraint>,
    pub bounds: Option<Vec<Bound>>,
    /// Diagonal of `W`; `None` is the identity.
    pub weights: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FilterStatus {
    Optimal,
    Infeasible,
}

impl FilterStatus {
    pub fn name(self) -> &'static str {
        match self {
            FilterStatus::Optimal => "optimal",
            FilterStatus::Infeasible => "infeasible",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterResult {
    /// The minimiser when `Optimal`; `u_ref` when `Infeasible`.
    pub u_star: Vec<f64>,
    /// One per constraint, in input order.
    pub multipliers: Vec<f64>,
    /// `(lower, upper)` per input component; zero when unbounded.
    pub bound_multipliers: Vec<(f64, f64)>,
    /// Indices of constraints with positive multipliers at the solution.
    pub active_set: Vec<usize>,
    pub status: FilterStatus,
    pub pivots: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

/// Euclidean projection of `u_ref` onto one half-space.
pub fn solve_single_constraint(
    u_ref: &[f64],
    c: &LinearConstraint,
) -> Result<Vec<f64>, FilterError> {
    if u_ref.len() != c.a.len() {
        return Err(FilterError::Dimension(format!(
            "u_ref has {} components, constraint {}",
            u_ref.len(),
            c.a.len()
        )));
    }
    let slack = c.slack(u_ref);
    if slack >= 0.0 {
        return Ok(u_ref.to_vec());
    }
    let nn = norm_sq(&c.a);
    if nn == 0.0 {
        return Err(FilterError::DegenerateConstraint { b: c.b });
    }
    let step = -slack / nn;
    Ok(u_ref.iter().zip(&c.a).map(|(u, a)| u + step * a).collect())
}

/// Where a row of the scaled problem came from.
#[derive(Debug, Clone, Copy, PartialEq)]
enum RowSource {
    Constraint(usize),
    Lower(usize),
    Upper(usize),
}

struct Row {
    n: DVector<f64>,
    b: f64,
    source: RowSource,
}

impl FilterProblem {
    fn check(&self) -> Result<(), FilterError> {
        let m = self.u_ref.len();
        if m == 0 || m > MAX_INPUTS {
            return Err(FilterError::Dimension(format!("input dimension {m} outside 1..={MAX_INPUTS}")));
        }
        if self.constraints.len() > MAX_CONSTRAINTS {
            return Err(FilterError::Dimension(format!(
                "{} constraints exceed {MAX_CONSTRAINTS}",
                self.constraints.len()
            )));
        }
        if !self.u_ref.iter().all(|v| v.is_finite()) {
            return Err(FilterError::Invalid("non-finite u_ref".into()));
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if c.a.len() != m {
                return Err(FilterError::Dimension(format!(
                    "constraint {i} has {} coefficients, expected {m}",
                    c.a.len()
                )));
            }
            if !c.a.iter().all(|v| v.is_finite()) || !c.b.is_finite() {
                return Err(FilterError::Invalid(format!("constraint {i} is not finite")));
            }
        }
        if let Some(bounds) = &self.bounds {
            if bounds.len() != m {
                return Err(FilterError::Dimension(format!("{} bounds for {m} inputs", bounds.len())));
            }
            for (i, b) in bounds.iter().enumerate() {
                if let (Some(lo), Some(hi)) = (b.lo, b.hi) {
                    if !(lo <= hi) {
                        return Err(FilterError::Invalid(format!("bound {i}: lo {lo} > hi {hi}")));
                    }
                }
            }
        }
        if let Some(w) = &self.weights {
            if w.len() != m || !w.iter().all(|&x| x > 0.0 && x.is_finite()) {
                return Err(FilterError::Invalid("weights must be positive, one per input".into()));
            }
        }
        Ok(())
    }

    fn within_bounds(&self, u: &[f64]) -> bool {
        match &self.bounds {
            None => true,
            Some(bounds) => bounds.iter().zip(u).all(|(b, &x)| {
                b.lo.is_none_or(|lo| x >= lo) && b.hi.is_none_or(|hi| x <= hi)
            }),
        }
    }

    /// True when `u` satisfies every constraint and bound exactly.
    pub fn is_feasible(&self, u: &[f64]) -> bool {
        self.constraints.iter().all(|c| c.slack(u) >= 0.0) && self.within_bounds(u)
    }
}

fn infeasible(p: &FilterProblem, pivots: usize) -> FilterResult {
    let m = p.u_ref.len();
    FilterResult {
        u_star: p.u_ref.clone(),
        multipliers: vec![0.0; p.constraints.len()],
        bound_multipliers: vec![(0.0, 0.0); m],
        active_set: Vec::new(),
        status: FilterStatus::Infeasible,
        pivots,
    }
}

/// Solves the QP exactly (up to floating point) by dual active-set pivoting.
pub fn solve_active_set(p: &FilterProblem) -> Result<FilterResult, FilterError> {
    p.check()?;
    let m = p.u_ref.len();
    if p.is_feasible(&p.u_ref) {
        return Ok(FilterResult {
            u_star: p.u_ref.clone(),
            multipliers: vec![0.0; p.constraints.len()],
            bound_multipliers: vec![(0.0, 0.0); m],
            active_set: Vec::new(),
            status: FilterStatus::Optimal,
            pivots: 0,
        });
    }

    // Scale to y = √w ⊙ u so the Hessian becomes the identity.
    let sqrt_w: Vec<f64> = match &p.weights {
        Some(w) => w.iter().map(|x| x.sqrt()).collect(),
        None => vec![1.0; m],
    };
    let mut rows = Vec::new();
    for (i, c) in p.constraints.iter().enumerate() {
        if c.is_degenerate() {
            if c.b > 0.0 {
                return Ok(infeasible(p, 0));
            }
            continue;
        }
        rows.push(Row {
            n: DVector::from_iterator(m, c.a.iter().zip(&sqrt_w).map(|(a, s)| a / s)),
            b: c.b,
            source: RowSource::Constraint(i),
        });
    }
    if let Some(bounds) = &p.bounds {
        for (j, b) in bounds.iter().enumerate() {
            let mut e = DVector::zeros(m);
            e[j] = 1.0 / sqrt_w[j];
            if let Some(lo) = b.lo {
                rows.push(Row { n: e.clone(), b: lo, source: RowSource::Lower(j) });
            }
            if let Some(hi) = b.hi {
                rows.push(Row { n: -e, b: -hi, source: RowSource::Upper(j) });
            }
        }
    }

    let y0 = DVector::from_iterator(m, p.u_ref.iter().zip(&sqrt_w).map(|(u, s)| u * s));
    let mut y = y0.clone();
    let mut active: Vec<usize> = Vec::new();
    let mut lambda: Vec<f64> = Vec::new();
    let mut pivots = 0usize;
    let scale = |r: &Row| 1.0 + r.b.abs();

    loop {
        // most violated inactive row, relative to its scale
        let mut worst: Option<(usize, f64)> = None;
        for (i, r) in rows.iter().enumerate() {
            if active.contains(&i) {
                continue;
            }
            let s = (r.n.dot(&y) - r.b) / (r.n.norm() * scale(r));
            if s < -1e-14 && worst.is_none_or(|(_, w)| s < w) {
                worst = Some((i, s));
            }
        }
        let Some((q, _)) = worst else { break };
        let nq = rows[q].n.clone();
        let mut lambda_q = 0.0;

        loop {
            pivots += 1;
            if pivots > MAX_PIVOTS {
                return Err(FilterError::IterationLimit(MAX_PIVOTS));
            }
            let (z, r) = step_directions(&rows, &active, &nq);
            let partial = r
                .iter()
                .enumerate()
                .filter(|(_, &rj)| rj > 0.0)
                .map(|(j, &rj)| (j, lambda[j] / rj))
                .min_by(|a, b| a.1.total_cmp(&b.1));
            let zn = z.dot(&nq);
            let full = if z.norm() > 1e-12 * nq.norm() && zn > 0.0 {
                Some((rows[q].b - nq.dot(&y)) / zn)
            } else {
                None
            };
            let t = match (partial, full) {
                (None, None) => return Ok(infeasible(p, pivots)),
                (Some((_, t1)), None) => t1,
                (None, Some(t2)) => t2,
                (Some((_, t1)), Some(t2)) => t1.min(t2),
            };
            if full.is_some() {
                y += &z * t;
            }
            for (l, rj) in lambda.iter_mut().zip(&r) {
                *l -= t * rj;
            }
            lambda_q += t;
            match (partial, full) {
                (_, Some(t2)) if t == t2 => {
                    active.push(q);
                    lambda.push(lambda_q);
                    break;
                }
                (Some((k, _)), _) => {
                    active.remove(k);
                    lambda.remove(k);
                }
                _ => unreachable!("step length is one of the two candidates"),
            }
        }
    }

    // Polish: exact projection onto the affine set of the final active rows.
    if !active.is_empty() {
        if let Some((y_exact, lam)) = project_onto_active(&rows, &active, &y0) {
            if lam.iter().all(|&l| l >= -1e-12) {
                y = y_exact;
                lambda = lam.iter().map(|&l| l.max(0.0)).collect();
            }
        }
    }

    let u_star: Vec<f64> = y.iter().zip(&sqrt_w).map(|(v, s)| v / s).collect();
    let mut multipliers = vec![0.0; p.constraints.len()];
    let mut bound_multipliers = vec![(0.0, 0.0); m];
    let mut active_set = Vec::new();
    for (&i, &l) in active.iter().zip(&lambda) {
        match rows[i].source {
            RowSource::Constraint(c) => {
                multipliers[c] = l;
                if l > 0.0 {
                    active_set.push(c);
                }
            }
            RowSource::Lower(j) => bound_multipliers[j].0 = l,
            RowSource::Upper(j) => bound_multipliers[j].1 = l,
        }
    }
    active_set.sort_unstable();
    Ok(FilterResult {
        u_star,
        multipliers,
        bound_multipliers,
        active_set,
        status: FilterStatus::Optimal,
        pivots,
    })
}

fn active_matrix(rows: &[Row], active: &[usize], m: usize) -> DMatrix<f64> {
    DMatrix::from_fn(m, active.len(), |i, j| rows[active[j]].n[i])
}

/// Primal direction `z = (I − N N⁺) n` and dual direction `r = N⁺ n`.
fn step_directions(rows: &[Row], active: &[usize], n: &DVector<f64>) -> (DVector<f64>, Vec<f64>) {
    if active.is_empty() {
        return (n.clone(), Vec::new());
    }
    let big_n = active_matrix(rows, active, n.len());
    let qr = big_n.clone().qr();
    let q = qr.q();
    let rmat = qr.r();
    let qtn = q.transpose() * n;
    let z = n - &q * &qtn;
    let r = rmat
        .solve_upper_triangular(&qtn)
        .map(|v| v.iter().copied().collect())
        .unwrap_or_else(|| vec![0.0; active.len()]);
    (z, r)
}

fn project_onto_active(
    rows: &[Row],
    active: &[usize],
    y0: &DVector<f64>,
) -> Option<(DVector<f64>, Vec<f64>)> {
    let big_n = active_matrix(rows, active, y0.len());
    let b = DVector::from_iterator(active.len(), active.iter().map(|&i| rows[i].b));
    let gram = big_n.transpose() * &big_n;
    let rhs = b - big_n.transpose() * y0;
    let lam = gram.cholesky()?.solve(&rhs);
    let y = y0 + &big_n * &lam;
    Some((y, lam.iter().copied().collect()))
}

/// Residuals of the KKT conditions for an `Optimal` result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResiduals {
    pub stationarity: f64,
    pub complementarity: f64,
    /// Largest constraint or bound violation (0 when feasible).
    pub primal: f64,
    /// Most negative multiplier (0 when all nonnegative).
    pub dual: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.stationarity.max(self.complementarity).max(self.primal).max(self.dual)
    }
}

pub fn kkt_residuals(p: &FilterProblem, r: &FilterResult) -> KktResiduals {
    let m = p.u_ref.len();
    let w = p.weights.clone().unwrap_or_else(|| vec![1.0; m]);
    let mut grad: Vec<f64> = (0..m).map(|i| w[i] * (r.u_star[i] - p.u_ref[i])).collect();
    let mut comp = 0.0f64;
    let mut primal = 0.0f64;
    let mut dual = 0.0f64;
    for (c, &l) in p.constraints.iter().zip(&r.multipliers) {
        for (g, a) in grad.iter_mut().zip(&c.a) {
            *g -= l * a;
        }
        let s = c.slack(&r.u_star);
        comp = comp.max((l * s).abs());
        primal = primal.max(-s);
        dual = dual.max(-l);
    }
    if let Some(bounds) = &p.bounds {
        for (j, (b, &(ll, lu))) in bounds.iter().zip(&r.bound_multipliers).enumerate() {
            grad[j] -= ll - lu;
            if let Some(lo) = b.lo {
                let s = r.u_star[j] - lo;
                comp = comp.max((ll * s).abs());
                primal = primal.max(-s);
            }
            if let Some(hi) = b.hi {
                let s = hi - r.u_star[j];
                comp = comp.max((lu * s).abs());
                primal = primal.max(-s);
            }
            dual = dual.max(-ll).max(-lu);
        }
    }
    KktResiduals {
        stationarity: norm_sq(&grad).sqrt(),
        complementarity: comp,
        primal,
        dual,
    }
}

/// Filter output with the per-obstacle barrier evaluations used to build it.
#[derive(Debug, Clone, PartialEq)]
pub struct Filtered {
    pub result: FilterResult,
    pub evals: Vec<BarrierEval>,
}

/// One constraint per obstacle from `kind`, then [`solve_active_set`].
#[allow(clippy::too_many_arguments)]
pub fn filter(
    vehicle: &Vehicle,
    state: &VehicleState,
    obstacles: &[Obstacle],
    kind: BarrierKind,
    u_ref: &[f64],
    k: ClassK,
    bounds: Option<&[Bound]>,
    weights: Option<&[f64]>,
) -> Result<Filtered, FilterError> {
    let evals = obstacles
        .iter()
        .map(|o| evaluate(vehicle, state, o, kind))
        .collect::<Result<Vec<_>, _>>()?;
    let problem = FilterProblem {
        u_ref: u_ref.to_vec(),
        constraints: evals.iter().map(|e| constraint_from_barrier(e, k)).collect(),
        bounds: bounds.map(|b| b.to_vec()),
        weights: weights.map(|w| w.to_vec()),
    };
    let result = solve_active_set(&problem)?;
    Ok(Filtered { result, evals })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(a: &[f64], b: f64) -> LinearConstraint {
        LinearConstraint { a: a.to_vec(), b }
    }

    #[test]
    fn kappa_examples() {
        assert_eq!(kappa(ClassK::default(), -2.0), -2.0);
        assert_eq!(kappa(ClassK::default(), 0.0), 0.0);
        assert_eq!(kappa(ClassK { gamma: 2.0 }, 3.0), 6.0);
    }

    #[test]
    fn constraint_rearrangement() {
        let e = BarrierEval {
            h: 1.0,
            lfh: 0.5,
            lgh: vec![1.0, 0.0],
            geometry: None,
            kind: BarrierKind::C3bf,
        };
        let lc = constraint_from_barrier(&e, ClassK::default());
        assert_eq!(lc.a, vec![1.0, 0.0]);
        assert_eq!(lc.b, -1.5);
    }

    #[test]
    fn single_constraint_examples() {
        assert_eq!(solve_single_constraint(&[0.0, 0.0], &c(&[1.0, 0.0], -1.0)).unwrap(), vec![0.0, 0.0]);
        assert_eq!(solve_single_constraint(&[0.0, 0.0], &c(&[1.0, 0.0], 1.0)).unwrap(), vec![1.0, 0.0]);
        assert_eq!(solve_single_constraint(&[2.0, 2.0], &c(&[0.0, 1.0], 3.0)).unwrap(), vec![2.0, 3.0]);
        assert!(matches!(
            solve_single_constraint(&[0.0], &c(&[0.0], 1.0)),
            Err(FilterError::DegenerateConstraint { .. })
        ));
    }

    #[test]
    fn active_set_examples() {
        let p = FilterProblem {
            u_ref: vec![0.0, 0.0],
            constraints: vec![c(&[1.0, 0.0], 1.0), c(&[0.0, 1.0], 1.0)],
            ..Default::default()
        };
        let r = solve_active_set(&p).unwrap();
        assert_eq!(r.status, FilterStatus::Optimal);
        assert!((r.u_star[0] - 1.0).abs() < 1e-12 && (r.u_star[1] - 1.0).abs() < 1e-12);
        assert_eq!(r.active_set, vec![0, 1]);

        let p = FilterProblem {
            u_ref: vec![0.0, 0.0],
            constraints: vec![c(&[1.0, 0.0], 1.0)],
            bounds: Some(vec![Bound { lo: None, hi: Some(0.0) }, Bound::default()]),
            weights: None,
        };
        assert_eq!(solve_active_set(&p).unwrap().status, FilterStatus::Infeasible);
    }

    #[test]
    fn degenerate_rows() {
        let vacuous = FilterProblem {
            u_ref: vec![0.5, 0.0],
            constraints: vec![c(&[0.0, 0.0], -1.0), c(&[1.0, 0.0], 1.0)],
            ..Default::default()
        };
        let r = solve_active_set(&vacuous).unwrap();
        assert_eq!(r.status, FilterStatus::Optimal);
        assert!((r.u_star[0] - 1.0).abs() < 1e-12);
        let contradictory = FilterProblem {
            u_ref: vec![0.0, 0.0],
            constraints: vec![c(&[0.0, 0.0], 0.1)],
            ..Default::default()
        };
        assert_eq!(solve_active_set(&contradictory).unwrap().status, FilterStatus::Infeasible);
    }

    #[test]
    fn parallel_constraints_conflict() {
        let p = FilterProblem {
            u_ref: vec![0.0, 0.0],
            constraints: vec![c(&[1.0, 1.0], 1.0), c(&[-2.0, -2.0], 0.0)],
            ..Default::default()
        };
        assert_eq!(solve_active_set(&p).unwrap().status, FilterStatus::Infeasible);
    }

    #[test]
    fn weighted_problem_satisfies_kkt() {
        let p = FilterProblem {
            u_ref: vec![0.0, 0.0],
            constraints: vec![c(&[1.0, 1.0], 1.0)],
            bounds: None,
            weights: Some(vec![1.0, 4.0]),
        };
        let r = solve_active_set(&p).unwrap();
        // W(u − u_ref) = λa → u = λ(1, 1/4), u1 + u2 = 1 → λ = 0.8
        assert!((r.u_star[0] - 0.8).abs() < 1e-12);
        assert!((r.u_star[1] - 0.2).abs() < 1e-12);
        assert!(kkt_residuals(&p, &r).max() < 1e-12);
    }

    #[test]
    fn bounds_bind() {
        let p = FilterProblem {
            u_ref: vec![0.0, 0.0],
            constraints: vec![c(&[1.0, 1.0], 2.0)],
            bounds: Some(vec![Bound { lo: None, hi: Some(0.5) }, Bound::default()]),
            weights: None,
        };
        let r = solve_active_set(&p).unwrap();
        assert!((r.u_star[0] - 0.5).abs() < 1e-12);
        assert!((r.u_star[1] - 1.5).abs() < 1e-12);
        assert!(kkt_residuals(&p, &r).max() < 1e-12);
        assert!(r.bound_multipliers[0].1 > 0.0);
    }

    #[test]
    fn feasible_reference_is_returned_unchanged() {
        let u = vec![0.1 + 0.2, -0.3];
        let p = FilterProblem {
            u_ref: u.clone(),
            constraints: vec![c(&[1.0, 0.0], 0.0)],
            ..Default::default()
        };
        let r = solve_active_set(&p).unwrap();
        assert_eq!(r.u_star, u);
        assert_eq!(r.pivots, 0);
    }
}
