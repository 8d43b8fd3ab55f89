//! Smooth convex true objectives with exact gradients.
//!
//! Two families are provided: a quadratic `½⟨h, Ah⟩ − ⟨b, h⟩`, where every
//! quantity in the excess-risk analysis is computable in closed form, and the
//! mean multiclass softmax cross-entropy of a linear model over a dataset.

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::dataset::Dataset;
use crate::error::{check_dim, Error, Result};
use crate::geometry::{pairing, DualVector, FeasibleSet, Vector};

const SOLVER_MAX_ITERS: usize = 500_000;

#[derive(Debug, Clone)]
pub struct Quadratic {
    /// Row-major `d × d` symmetric positive semi-definite matrix.
    a: Vec<f64>,
    b: Vector,
}

impl Quadratic {
    pub fn dim(&self) -> usize {
        self.b.dim()
    }

    pub fn matrix(&self) -> &[f64] {
        &self.a
    }

    pub fn linear_term(&self) -> &Vector {
        &self.b
    }

    fn apply(&self, h: &[f64]) -> Vec<f64> {
        let d = self.dim();
        (0..d)
            .map(|i| self.a[i * d..(i + 1) * d].iter().zip(h).map(|(a, x)| a * x).sum())
            .collect()
    }
}

/// Mean softmax cross-entropy of the linear scores `W x`, with the
/// `k × d_in` weight matrix flattened class-major into `h`.
#[derive(Debug, Clone)]
pub struct MulticlassLogistic {
    data: Arc<Dataset>,
}

impl MulticlassLogistic {
    pub fn data(&self) -> &Dataset {
        &self.data
    }

    fn example_loss(&self, h: &[f64], i: usize, scores: &mut [f64]) -> f64 {
        let x = self.data.row(i);
        let d = x.len();
        for (c, s) in scores.iter_mut().enumerate() {
            *s = h[c * d..(c + 1) * d].iter().zip(x).map(|(w, v)| w * v).sum();
        }
        let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
        lse - scores[self.data.label(i)]
    }

    /// Adds `weight · ∇ℓᵢ(h)` into `out`.
    fn accumulate_gradient(&self, h: &[f64], i: usize, weight: f64, scores: &mut [f64], out: &mut [f64]) {
        let x = self.data.row(i);
        let d = x.len();
        for (c, s) in scores.iter_mut().enumerate() {
            *s = h[c * d..(c + 1) * d].iter().zip(x).map(|(w, v)| w * v).sum();
        }
        let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut norm = 0.0;
        for s in scores.iter_mut() {
            *s = (*s - max).exp();
            norm += *s;
        }
        let y = self.data.label(i);
        for (c, s) in scores.iter().enumerate() {
            let coeff = weight * (s / norm - if c == y { 1.0 } else { 0.0 });
            if coeff != 0.0 {
                for (o, v) in out[c * d..(c + 1) * d].iter_mut().zip(x) {
                    *o += coeff * v;
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub enum ObjectiveKind {
    Quadratic(Quadratic),
    MulticlassLogistic(MulticlassLogistic),
}

/// A convex, λ-smooth true objective R restricted to a feasible set.
#[derive(Debug, Clone)]
pub struct Objective {
    kind: ObjectiveKind,
    smoothness: f64,
    feasible: FeasibleSet,
}

impl Objective {
    /// `½⟨h, Ah⟩ − ⟨b, h⟩`. The smoothness constant is the top eigenvalue of `A`.
    pub fn quadratic(a: Vec<Vec<f64>>, b: Vector, feasible: FeasibleSet) -> Result<Self> {
        let d = b.dim();
        check_dim(d, feasible.dim())?;
        check_dim(d, a.len())?;
        for row in &a {
            check_dim(d, row.len())?;
        }
        let flat: Vec<f64> = a.concat();
        if flat.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(
                "quadratic matrix has non-finite entries".into(),
            ));
        }
        let scale = flat.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
        for i in 0..d {
            for j in 0..i {
                if (flat[i * d + j] - flat[j * d + i]).abs() > 1e-12 * scale {
                    return Err(Error::InvalidParameter(format!(
                        "quadratic matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let eigen = SymmetricEigen::new(DMatrix::from_row_slice(d, d, &flat)).eigenvalues;
        let top = eigen.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let bottom = eigen.iter().cloned().fold(f64::INFINITY, f64::min);
        if bottom < -1e-10 * scale {
            return Err(Error::InvalidParameter(format!(
                "quadratic matrix is not positive semi-definite (eigenvalue {bottom})"
            )));
        }
        Ok(Self {
            kind: ObjectiveKind::Quadratic(Quadratic { a: flat, b }),
            smoothness: top.max(0.0),
            feasible,
        })
    }

    /// Diagonal quadratic `½ Σ aᵢhᵢ² − ⟨b, h⟩`.
    pub fn diagonal_quadratic(diag: &[f64], b: Vector, feasible: FeasibleSet) -> Result<Self> {
        let d = diag.len();
        let a = (0..d)
            .map(|i| (0..d).map(|j| if i == j { diag[i] } else { 0.0 }).collect())
            .collect();
        Self::quadratic(a, b, feasible)
    }

    /// Mean multiclass logistic loss over `data`.
    ///
    /// Uses λ = ½·maxᵢ‖xᵢ‖²: the softmax Hessian `diag(p) − ppᵀ` has spectral
    /// norm at most ½.
    pub fn multiclass_logistic(data: Arc<Dataset>, feasible: FeasibleSet) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::InvalidParameter(
                "logistic objective needs a non-empty dataset".into(),
            ));
        }
        check_dim(data.model_dim(), feasible.dim())?;
        let smoothness = 0.5 * data.max_row_norm_sq();
        Ok(Self {
            kind: ObjectiveKind::MulticlassLogistic(MulticlassLogistic { data }),
            smoothness,
            feasible,
        })
    }

    pub fn kind(&self) -> &ObjectiveKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.feasible.dim()
    }

    pub fn smoothness(&self) -> f64 {
        self.smoothness
    }

    pub fn feasible(&self) -> &FeasibleSet {
        &self.feasible
    }

    /// Number of examples backing a data-driven objective (0 for quadratics).
    pub fn n_examples(&self) -> usize {
        match &self.kind {
            ObjectiveKind::Quadratic(_) => 0,
            ObjectiveKind::MulticlassLogistic(m) => m.data.len(),
        }
    }

    pub fn value(&self, h: &Vector) -> Result<f64> {
        check_dim(self.dim(), h.dim())?;
        Ok(match &self.kind {
            ObjectiveKind::Quadratic(q) => {
                let ah = q.apply(h.as_slice());
                let quad: f64 = ah.iter().zip(h.iter()).map(|(a, x)| a * x).sum();
                0.5 * quad - pairing(&q.b.to_dual(), h)?
            }
            ObjectiveKind::MulticlassLogistic(m) => {
                let mut scores = vec![0.0; m.data.n_classes()];
                let n = m.data.len();
                (0..n)
                    .map(|i| m.example_loss(h.as_slice(), i, &mut scores))
                    .sum::<f64>()
                    / n as f64
            }
        })
    }

    pub fn gradient(&self, h: &Vector) -> Result<DualVector> {
        check_dim(self.dim(), h.dim())?;
        match &self.kind {
            ObjectiveKind::Quadratic(q) => {
                let ah = q.apply(h.as_slice());
                DualVector::new(ah.iter().zip(q.b.iter()).map(|(a, b)| a - b).collect())
            }
            ObjectiveKind::MulticlassLogistic(m) => {
                let all: Vec<usize> = (0..m.data.len()).collect();
                self.batch_gradient(h, &all)
            }
        }
    }

    /// Mean of per-example gradients over `indices` (data-driven objectives only).
    pub fn batch_gradient(&self, h: &Vector, indices: &[usize]) -> Result<DualVector> {
        check_dim(self.dim(), h.dim())?;
        let ObjectiveKind::MulticlassLogistic(m) = &self.kind else {
            return Err(Error::InvalidParameter(
                "mini-batch gradients need a data-driven objective".into(),
            ));
        };
        if indices.is_empty() {
            return Err(Error::InvalidParameter("empty mini-batch".into()));
        }
        let mut out = vec![0.0; self.dim()];
        let mut scores = vec![0.0; m.data.n_classes()];
        let weight = 1.0 / indices.len() as f64;
        for &i in indices {
            if i >= m.data.len() {
                return Err(Error::InvalidParameter(format!("example index {i} out of range")));
            }
            m.accumulate_gradient(h.as_slice(), i, weight, &mut scores, &mut out);
        }
        DualVector::new(out)
    }

    /// Gradient of a single example's loss.
    pub fn example_gradient(&self, h: &Vector, index: usize) -> Result<DualVector> {
        self.batch_gradient(h, &[index])
    }

    /// B_R(u; v) = R(u) − R(v) − ⟨∇R(v), u − v⟩.
    pub fn bregman(&self, u: &Vector, v: &Vector) -> Result<f64> {
        match &self.kind {
            ObjectiveKind::Quadratic(q) => {
                let diff = u.sub(v)?;
                let ad = q.apply(diff.as_slice());
                Ok(0.5 * ad.iter().zip(diff.iter()).map(|(a, x)| a * x).sum::<f64>())
            }
            ObjectiveKind::MulticlassLogistic(_) => {
                let diff = u.sub(v)?;
                Ok(self.value(u)? - self.value(v)? - pairing(&self.gradient(v)?, &diff)?)
            }
        }
    }

    /// Norm of the gradient mapping `(h − P(h − η∇R(h)))/η`; equals ‖∇R(h)‖₂
    /// whenever the step stays inside the set.
    pub fn stationarity_residual(&self, h: &Vector) -> Result<f64> {
        let eta = self.solver_step();
        let grad = self.gradient(h)?;
        let mut trial = h.clone();
        trial.add_scaled(-eta, &grad.to_primal())?;
        let projected = self.feasible.project(&trial)?;
        Ok(h.sub(&projected)?.l2_norm() / eta)
    }

    fn solver_step(&self) -> f64 {
        if self.smoothness > 0.0 {
            1.0 / self.smoothness
        } else {
            1.0
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReferencePoint {
    pub h_star: Vector,
    pub value: f64,
    pub stationarity_residual: f64,
}

/// High-precision minimiser of R over its feasible set.
///
/// Deterministic accelerated projected gradient descent (step 1/λ) with
/// function-value restarts, stopped once the gradient-mapping residual drops
/// to `tol`.
pub fn solve_reference(obj: &Objective, tol: f64) -> Result<ReferencePoint> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let eta = obj.solver_step();
    let set = obj.feasible();
    let mut x = set.project(&set.center_point())?;
    let mut y = x.clone();
    let mut momentum = 1.0_f64;
    let mut f_x = obj.value(&x)?;
    let mut best = (obj.stationarity_residual(&x)?, x.clone());

    for iter in 0..SOLVER_MAX_ITERS {
        if best.0 <= tol {
            break;
        }
        let grad = obj.gradient(&y)?;
        let mut step = y.clone();
        step.add_scaled(-eta, &grad.to_primal())?;
        let x_next = set.project(&step)?;
        let f_next = obj.value(&x_next)?;

        if f_next > f_x + 4.0 * f64::EPSILON * (1.0 + f_x.abs()) {
            // restart from the last iterate without momentum; increases at the
            // roundoff level are ignored so the residual can keep shrinking
            y = x.clone();
            momentum = 1.0;
            continue;
        }
        let momentum_next = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
        let beta = (momentum - 1.0) / momentum_next;
        let mut y_next = x_next.clone();
        y_next.add_scaled(beta, &x_next.sub(&x)?)?;
        y = y_next;
        x = x_next;
        f_x = f_next;
        momentum = momentum_next;

        if iter % 8 == 0 {
            let residual = obj.stationarity_residual(&x)?;
            if residual < best.0 {
                best = (residual, x.clone());
            }
        }
    }
    let residual = obj.stationarity_residual(&x)?;
    if residual < best.0 {
        best = (residual, x);
    }
    if best.0 > tol {
        return Err(Error::NoConvergence {
            iterations: SOLVER_MAX_ITERS,
            residual: best.0,
        });
    }
    let (stationarity_residual, h_star) = best;
    Ok(ReferencePoint {
        value: obj.value(&h_star)?,
        h_star,
        stationarity_residual,
    })
}
