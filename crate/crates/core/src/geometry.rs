//! Finite-dimensional primal/dual vectors, feasible sets, mirror maps and
//! Bregman divergences.
//!
//! Primal points live in [`Vector`], gradients and other linear functionals
//! in [`DualVector`]. The two are kept as distinct types so that a gradient
//! can never be added to an iterate without an explicit step size.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Smallest coordinate an iterate may take under the negative-entropy map.
pub const ENTROPY_FLOOR: f64 = 1e-12;

/// Tolerance used by [`FeasibleSet::contains`].
pub const MEMBERSHIP_TOL: f64 = 1e-12;

macro_rules! coords_type {
    ($name:ident) => {
        #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(Vec<f64>);

        impl $name {
            /// Builds from coordinates, rejecting empty input and NaN/Inf.
            pub fn new(coords: Vec<f64>) -> Result<Self> {
                if coords.is_empty() {
                    return Err(Error::InvalidParameter("dimension must be at least 1".into()));
                }
                if let Some(index) = coords.iter().position(|x| !x.is_finite()) {
                    return Err(Error::NonFinite { index });
                }
                Ok(Self(coords))
            }

            pub fn zeros(dim: usize) -> Self {
                Self(vec![0.0; dim])
            }

            pub fn dim(&self) -> usize {
                self.0.len()
            }

            pub fn as_slice(&self) -> &[f64] {
                &self.0
            }

            pub fn into_inner(self) -> Vec<f64> {
                self.0
            }

            pub fn iter(&self) -> std::slice::Iter<'_, f64> {
                self.0.iter()
            }

            pub fn is_finite(&self) -> bool {
                self.0.iter().all(|x| x.is_finite())
            }

            pub fn l2_norm(&self) -> f64 {
                self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
            }

            pub fn l1_norm(&self) -> f64 {
                self.0.iter().map(|x| x.abs()).sum()
            }

            pub fn linf_norm(&self) -> f64 {
                self.0.iter().fold(0.0, |m, x| m.max(x.abs()))
            }

            pub fn add(&self, other: &Self) -> Result<Self> {
                check_dim(self.dim(), other.dim())?;
                Ok(Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect()))
            }

            pub fn sub(&self, other: &Self) -> Result<Self> {
                check_dim(self.dim(), other.dim())?;
                Ok(Self(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect()))
            }

            pub fn scale(&self, factor: f64) -> Self {
                Self(self.0.iter().map(|a| a * factor).collect())
            }

            /// `self += factor * other`
            pub fn add_scaled(&mut self, factor: f64, other: &Self) -> Result<()> {
                check_dim(self.dim(), other.dim())?;
                for (a, b) in self.0.iter_mut().zip(&other.0) {
                    *a += factor * b;
                }
                Ok(())
            }

            pub(crate) fn from_raw(coords: Vec<f64>) -> Self {
                debug_assert!(coords.iter().all(|x| x.is_finite()));
                Self(coords)
            }
        }

        impl std::ops::Index<usize> for $name {
            type Output = f64;
            fn index(&self, i: usize) -> &f64 {
                &self.0[i]
            }
        }

        impl TryFrom<Vec<f64>> for $name {
            type Error = Error;
            fn try_from(coords: Vec<f64>) -> Result<Self> {
                Self::new(coords)
            }
        }
    };
}

coords_type!(Vector);
coords_type!(DualVector);

impl Vector {
    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    /// Reinterprets a primal point as a dual vector (valid in the Euclidean
    /// setting where the space is identified with its dual).
    pub fn to_dual(&self) -> DualVector {
        DualVector(self.0.clone())
    }

    pub fn norm(&self, norm: Norm) -> f64 {
        primal_norm(self, norm)
    }
}

impl DualVector {
    pub fn to_primal(&self) -> Vector {
        Vector(self.0.clone())
    }

    pub fn dual_norm(&self, norm: Norm) -> f64 {
        dual_norm(self, norm)
    }
}

/// Primal norm of the ambient geometry. The dual norm is the one induced
/// by pairing: ℓ₂ is self-dual, ℓ₁ pairs with ℓ∞.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    L2,
    L1,
}

/// Coupling ⟨g, h⟩ = Σ gᵢhᵢ.
pub fn pairing(g: &DualVector, h: &Vector) -> Result<f64> {
    check_dim(g.dim(), h.dim())?;
    Ok(g.0.iter().zip(&h.0).map(|(a, b)| a * b).sum())
}

pub fn primal_norm(h: &Vector, norm: Norm) -> f64 {
    match norm {
        Norm::L2 => h.l2_norm(),
        Norm::L1 => h.l1_norm(),
    }
}

/// Dual norm of `g` with respect to the primal norm `norm`.
pub fn dual_norm(g: &DualVector, norm: Norm) -> f64 {
    match norm {
        Norm::L2 => g.l2_norm(),
        Norm::L1 => g.linf_norm(),
    }
}

/// Convex, closed, bounded hypothesis class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeasibleSet {
    L2Ball { center: Vector, radius: f64 },
    Simplex { dim: usize },
}

impl FeasibleSet {
    pub fn l2_ball(center: Vector, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        Ok(Self::L2Ball { center, radius })
    }

    /// Origin-centred ℓ₂ ball.
    pub fn centered_ball(dim: usize, radius: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        Self::l2_ball(Vector::zeros(dim), radius)
    }

    pub fn simplex(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("simplex dimension must be at least 1".into()));
        }
        Ok(Self::Simplex { dim })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::L2Ball { center, .. } => center.dim(),
            Self::Simplex { dim } => *dim,
        }
    }

    /// ℓ₂ diameter.
    pub fn diameter(&self) -> f64 {
        match self {
            Self::L2Ball { radius, .. } => 2.0 * radius,
            Self::Simplex { dim } if *dim == 1 => 0.0,
            Self::Simplex { .. } => std::f64::consts::SQRT_2,
        }
    }

    pub fn contains(&self, h: &Vector) -> bool {
        if h.dim() != self.dim() || !h.is_finite() {
            return false;
        }
        match self {
            Self::L2Ball { center, radius } => {
                let dist = h.sub(center).map(|d| d.l2_norm()).unwrap_or(f64::INFINITY);
                dist <= radius * (1.0 + MEMBERSHIP_TOL) + MEMBERSHIP_TOL
            }
            Self::Simplex { .. } => {
                h.iter().all(|&x| x >= -MEMBERSHIP_TOL) && (h.iter().sum::<f64>() - 1.0).abs() <= MEMBERSHIP_TOL
            }
        }
    }

    /// Euclidean projection onto the set.
    pub fn project(&self, h: &Vector) -> Result<Vector> {
        check_dim(self.dim(), h.dim())?;
        match self {
            Self::L2Ball { center, radius } => {
                let offset = h.sub(center)?;
                let dist = offset.l2_norm();
                if dist <= *radius {
                    Ok(h.clone())
                } else {
                    let mut out = center.clone();
                    out.add_scaled(radius / dist, &offset)?;
                    Ok(out)
                }
            }
            Self::Simplex { .. } => Ok(Vector::from_raw(project_onto_simplex(h.as_slice()))),
        }
    }

    /// sup over h, h' in the set of ⟨g, h − h'⟩.
    pub fn support_width(&self, g: &DualVector) -> Result<f64> {
        check_dim(self.dim(), g.dim())?;
        Ok(match self {
            Self::L2Ball { radius, .. } => 2.0 * radius * g.l2_norm(),
            Self::Simplex { .. } => {
                let max = g.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let min = g.iter().cloned().fold(f64::INFINITY, f64::min);
                max - min
            }
        })
    }

    /// A canonical interior-ish member: ball centre or simplex barycentre.
    pub fn center_point(&self) -> Vector {
        match self {
            Self::L2Ball { center, .. } => center.clone(),
            Self::Simplex { dim } => Vector::from_raw(vec![1.0 / *dim as f64; *dim]),
        }
    }
}

/// Sort-based Euclidean projection onto the probability simplex.
fn project_onto_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut tau = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - 1.0) / (i as f64 + 1.0);
        if u - candidate > 0.0 {
            tau = candidate;
        }
    }
    v.iter().map(|&x| (x - tau).max(0.0)).collect()
}

/// Strictly convex potential Φ defining a mirror-descent geometry.
///
/// `Euclidean` is Φ(h) = ½‖h‖², 1-strongly convex w.r.t. ℓ₂.
/// `NegativeEntropy` is Φ(h) = Σ hᵢ ln hᵢ on the positive orthant, 1-strongly
/// convex w.r.t. ℓ₁ on the simplex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MirrorMap {
    Euclidean,
    NegativeEntropy,
}

impl MirrorMap {
    pub fn strong_convexity(&self) -> f64 {
        1.0
    }

    pub fn norm(&self) -> Norm {
        match self {
            Self::Euclidean => Norm::L2,
            Self::NegativeEntropy => Norm::L1,
        }
    }

    pub fn potential(&self, h: &Vector) -> Result<f64> {
        match self {
            Self::Euclidean => Ok(0.5 * h.iter().map(|x| x * x).sum::<f64>()),
            Self::NegativeEntropy => {
                let mut total = 0.0;
                for (i, &x) in h.iter().enumerate() {
                    if x < 0.0 {
                        return Err(Error::Domain(format!("coordinate {i} is negative ({x})")));
                    }
                    if x > 0.0 {
                        total += x * x.ln();
                    }
                }
                Ok(total)
            }
        }
    }

    /// ∇Φ(h). The entropy gradient requires strictly positive coordinates.
    pub fn gradient(&self, h: &Vector) -> Result<DualVector> {
        match self {
            Self::Euclidean => Ok(h.to_dual()),
            Self::NegativeEntropy => {
                require_positive(h)?;
                Ok(DualVector::from_raw(h.iter().map(|x| x.ln() + 1.0).collect()))
            }
        }
    }

    /// (∇Φ)⁻¹(θ): the primal point whose mirror image is θ.
    pub fn inverse_gradient(&self, theta: &DualVector) -> Result<Vector> {
        let out: Vec<f64> = match self {
            Self::Euclidean => theta.as_slice().to_vec(),
            Self::NegativeEntropy => theta.iter().map(|t| (t - 1.0).exp()).collect(),
        };
        Vector::new(out)
    }

    /// B_Φ(u; v) = Φ(u) − Φ(v) − ⟨∇Φ(v), u − v⟩.
    pub fn bregman(&self, u: &Vector, v: &Vector) -> Result<f64> {
        check_dim(u.dim(), v.dim())?;
        match self {
            Self::Euclidean => Ok(0.5 * u.sub(v)?.iter().map(|x| x * x).sum::<f64>()),
            Self::NegativeEntropy => {
                require_positive(v)?;
                let mut total = 0.0;
                for (i, (&a, &b)) in u.iter().zip(v.iter()).enumerate() {
                    if a < 0.0 {
                        return Err(Error::Domain(format!("coordinate {i} of u is negative ({a})")));
                    }
                    let log_term = if a > 0.0 { a * (a / b).ln() } else { 0.0 };
                    total += log_term - a + b;
                }
                Ok(total.max(0.0))
            }
        }
    }

    /// argmin over the set of B_Φ(h; point).
    pub fn bregman_project(&self, set: &FeasibleSet, point: &Vector) -> Result<Vector> {
        match (self, set) {
            (Self::Euclidean, _) => set.project(point),
            (Self::NegativeEntropy, FeasibleSet::Simplex { dim }) => {
                check_dim(*dim, point.dim())?;
                require_positive(point)?;
                let total: f64 = point.iter().sum();
                let mut out = point.scale(1.0 / total);
                clamp_to_entropy_domain(&mut out);
                // the floor may add mass; renormalising keeps every coordinate positive
                let total: f64 = out.iter().sum();
                Ok(out.scale(1.0 / total))
            }
            (Self::NegativeEntropy, FeasibleSet::L2Ball { .. }) => Err(Error::InvalidParameter(
                "the negative-entropy map is only supported on the simplex".into(),
            )),
        }
    }

    /// sup over h, h' in the set of B_Φ(h; h'), when finite.
    pub fn bregman_diameter(&self, set: &FeasibleSet) -> Option<f64> {
        match (self, set) {
            (Self::Euclidean, s) => Some(0.5 * s.diameter().powi(2)),
            (Self::NegativeEntropy, _) => None,
        }
    }
}

/// B_Φ(u; v) for the given mirror map.
pub fn bregman(map: MirrorMap, u: &Vector, v: &Vector) -> Result<f64> {
    map.bregman(u, v)
}

/// Euclidean projection onto the set.
pub fn project(set: &FeasibleSet, h: &Vector) -> Result<Vector> {
    set.project(h)
}

/// Raises every coordinate to at least [`ENTROPY_FLOOR`].
pub fn clamp_to_entropy_domain(h: &mut Vector) {
    for x in h.as_mut_slice() {
        if *x < ENTROPY_FLOOR {
            *x = ENTROPY_FLOOR;
        }
    }
}

fn require_positive(v: &Vector) -> Result<()> {
    match v.iter().position(|&x| x <= 0.0) {
        Some(i) => Err(Error::Domain(format!(
            "coordinate {i} is {} but must be strictly positive",
            v[i]
        ))),
        None => Ok(()),
    }
}
