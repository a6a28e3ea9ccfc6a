//! Ryu and Malitsky–Tam splitting operators for normal cones of subspaces.
//!
//! With `A_i = N_{U_i}` every resolvent is a projector, so both operators are
//! linear (affine for affine subspaces) and their fixed-point sets have
//! closed-form projectors built from Anderson–Duffin formulas.
//!
//! Governing vectors live in `X^{n-1}` and shadow vectors in `X^n`, both laid
//! out as contiguous blocks of length `d` in index order: `z = [z_1 | … | z_{n-1}]`.
//! Ryu splitting is the `n = 3` case with `z = [x | y]`.

mod mt;
mod ryu;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::subspaces::{AffineSubspace, Subspace};

pub use mt::MtProblem;
pub use ryu::RyuProblem;

/// Relative residual allowed when checking that affine data is consistent.
pub const DEFAULT_CONSISTENCY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Ryu,
    Mt,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Ryu => "ryu",
            Algorithm::Mt => "mt",
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ryu" => Ok(Algorithm::Ryu),
            "mt" | "malitsky-tam" => Ok(Algorithm::Mt),
            other => Err(Error::InvalidInput(format!("unknown algorithm `{other}`"))),
        }
    }
}

/// `x ↦ Lx + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    pub linear: Matrix,
    pub offset: Vec<f64>,
}

impl AffineMap {
    pub fn new(linear: Matrix, offset: Vec<f64>) -> Result<Self> {
        if !linear.is_square() {
            return Err(Error::NotSquare {
                operation: "affine map",
                rows: linear.rows(),
                cols: linear.cols(),
            });
        }
        if offset.len() != linear.rows() {
            return Err(Error::DimensionMismatch {
                context: "affine map offset",
                expected: linear.rows(),
                got: offset.len(),
            });
        }
        Ok(Self { linear, offset })
    }

    pub fn linear(linear: Matrix) -> Self {
        let n = linear.rows();
        Self {
            linear,
            offset: vec![0.0; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = self.linear.try_mul_vec(x)?;
        for (yi, bi) in y.iter_mut().zip(&self.offset) {
            *yi += bi;
        }
        Ok(y)
    }

    /// `(1 − λ) Id + λ T`.
    pub fn relaxed(&self, lambda: f64) -> Self {
        let id = Matrix::identity(self.dim());
        Self {
            linear: &id.scale(1.0 - lambda) + &self.linear.scale(lambda),
            offset: self.offset.iter().map(|b| lambda * b).collect(),
        }
    }
}

/// Closed-form projector onto `Fix T = D ⊕ E` (plus a shift for affine problems).
///
/// `z_block` is the projector onto the consensus part `D` built from `P_Z`,
/// `e_projector` the projector onto the complementary piece `E`.
#[derive(Debug, Clone)]
pub struct FixDecomposition {
    pub fix_projector: Matrix,
    pub shift: Vec<f64>,
    pub z_block: Matrix,
    pub e_projector: Matrix,
}

impl FixDecomposition {
    fn from_parts(z_block: Matrix, e_projector: Matrix) -> Self {
        let fix_projector = &z_block + &e_projector;
        let m = fix_projector.rows();
        Self {
            fix_projector,
            shift: vec![0.0; m],
            z_block,
            e_projector,
        }
    }

    pub fn dim(&self) -> usize {
        self.shift.len()
    }

    /// `P_{Fix T}(z) = P_{Fix L}(z) + a`.
    pub fn project(&self, z: &[f64]) -> Result<Vec<f64>> {
        let mut p = self.fix_projector.try_mul_vec(z)?;
        for (pi, ai) in p.iter_mut().zip(&self.shift) {
            *pi += ai;
        }
        Ok(p)
    }

    /// Largest violation among symmetry, idempotency, `D ⊥ E` and the sum identity.
    pub fn invariant_defect(&self) -> f64 {
        let p = &self.fix_projector;
        let sym = (p - &p.transpose()).frobenius_norm();
        let idem = (&(p * p) - p).frobenius_norm();
        let orth = (&self.z_block * &self.e_projector).frobenius_norm();
        let sum = (&(&self.z_block + &self.e_projector) - p).frobenius_norm();
        sym.max(idem).max(orth).max(sum)
    }
}

/// Common interface of the two splitting schemes.
pub trait Splitting: Send + Sync {
    fn algorithm(&self) -> Algorithm;

    /// The `n` sets, in order.
    fn sets(&self) -> &[AffineSubspace];

    /// `V_1 ∩ … ∩ V_n` (its parallel space is `Z`).
    fn intersection(&self) -> &AffineSubspace;

    /// Forward pass `M z ∈ X^n` (the shadow).
    fn forward(&self, z: &[f64]) -> Result<Vec<f64>>;

    /// One application of the splitting operator `T`.
    fn step(&self, z: &[f64]) -> Result<Vec<f64>>;

    /// Linear part of `M` as an `nd x (n−1)d` matrix.
    fn forward_matrix(&self) -> Result<Matrix>;

    /// `T` as an affine map on `X^{n−1}`; the offset is `T(0)` and vanishes for linear problems.
    fn matrix(&self) -> Result<AffineMap>;

    /// Projector onto the fixed-point set of the linear (parallel) operator.
    fn linear_fix_projector(&self) -> Result<FixDecomposition>;

    /// The point `p` whose projection onto the intersection is the shadow limit:
    /// the first block for Ryu, the block average for Malitsky–Tam.
    fn seed_point(&self, z: &[f64]) -> Result<Vec<f64>>;

    fn ambient_dim(&self) -> usize {
        self.intersection().ambient_dim()
    }

    fn num_sets(&self) -> usize {
        self.sets().len()
    }

    fn governing_dim(&self) -> usize {
        (self.num_sets() - 1) * self.ambient_dim()
    }

    fn shadow_dim(&self) -> usize {
        self.num_sets() * self.ambient_dim()
    }

    fn is_affine(&self) -> bool {
        self.sets().iter().any(|s| !s.is_linear())
    }

    fn subspace_projectors(&self) -> Vec<&Matrix> {
        self.sets().iter().map(|s| s.direction().projector()).collect()
    }

    /// `(1 − λ) z + λ T z`.
    fn relaxed_step(&self, z: &[f64], lambda: f64) -> Result<Vec<f64>> {
        let tz = self.step(z)?;
        Ok(z.iter()
            .zip(&tz)
            .map(|(a, b)| (1.0 - lambda) * a + lambda * b)
            .collect())
    }

    /// Projector onto `Fix T`, including the affine shift when needed.
    fn fix_projector(&self) -> Result<FixDecomposition> {
        let linear = self.linear_fix_projector()?;
        if !self.is_affine() {
            return Ok(linear);
        }
        affine_lift(&self.matrix()?, linear, DEFAULT_CONSISTENCY_TOL)
    }

    /// The consensus vector `(P_V p, …, P_V p) ∈ X^n` that the shadow sequence converges to.
    fn shadow_limit(&self, start: &[f64]) -> Result<Vec<f64>> {
        let p = self.seed_point(start)?;
        let q = self.intersection().project(&p)?;
        Ok(q.iter()
            .copied()
            .cycle()
            .take(self.shadow_dim())
            .collect())
    }

    fn check_governing(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.governing_dim() {
            return Err(Error::DimensionMismatch {
                context: "governing vector",
                expected: self.governing_dim(),
                got: z.len(),
            });
        }
        Ok(())
    }
}

/// Shift `a = (Id − L)† b` for `T = L + b`, attached to the linear fixed-point projector
/// so that `P_{Fix T} x = P_{Fix L} x + a`.
///
/// Fails with [`Error::Inconsistent`] when `(Id − L) a ≠ b`, i.e. `Fix T` is empty.
pub fn affine_lift(map: &AffineMap, linear_fix: FixDecomposition, tol: f64) -> Result<FixDecomposition> {
    if linear_fix.dim() != map.dim() {
        return Err(Error::DimensionMismatch {
            context: "affine_lift",
            expected: map.dim(),
            got: linear_fix.dim(),
        });
    }
    let b = &map.offset;
    if b.iter().all(|&v| v == 0.0) {
        return Ok(FixDecomposition {
            shift: vec![0.0; map.dim()],
            ..linear_fix
        });
    }
    let gap = &Matrix::identity(map.dim()) - &map.linear;
    let a = linalg::pinv(&gap)?.mul_vec(b);
    let residual = linalg::distance(&gap.mul_vec(&a), b);
    let bound = tol * (1.0 + linalg::norm(b));
    if residual > bound {
        return Err(Error::Inconsistent {
            residual,
            tol: bound,
        });
    }
    Ok(FixDecomposition {
        shift: a,
        ..linear_fix
    })
}

/// Projector onto the diagonal `{(x, …, x)}` of `X^k`.
pub(crate) fn diagonal_projector(d: usize, k: usize) -> Matrix {
    let block = Matrix::identity(d).scale(1.0 / k as f64);
    let grid: Vec<Vec<Matrix>> = (0..k).map(|_| vec![block.clone(); k]).collect();
    Matrix::from_blocks(&grid).expect("uniform blocks")
}

/// Builds the sets for a problem, checking dimensions and the consistency of affine data.
pub(crate) fn validate_sets(sets: Vec<AffineSubspace>, min_sets: usize) -> Result<(Vec<AffineSubspace>, AffineSubspace)> {
    if sets.len() < min_sets {
        return Err(Error::InvalidInput(format!(
            "need at least {min_sets} subspaces, got {}",
            sets.len()
        )));
    }
    let intersection = crate::subspaces::intersect_affine(&sets, DEFAULT_CONSISTENCY_TOL)?;
    for s in &sets {
        if !s.contains(intersection.anchor(), DEFAULT_CONSISTENCY_TOL * (1.0 + linalg::norm(s.anchor())))? {
            let residual = linalg::distance(&s.project(intersection.anchor())?, intersection.anchor());
            return Err(Error::Inconsistent {
                residual,
                tol: DEFAULT_CONSISTENCY_TOL,
            });
        }
    }
    Ok((sets, intersection))
}

pub(crate) fn linear_sets(subspaces: Vec<Subspace>) -> Vec<AffineSubspace> {
    subspaces.into_iter().map(AffineSubspace::linear).collect()
}

pub(crate) fn affine_sets(subspaces: Vec<Subspace>, anchors: &[Vec<f64>]) -> Result<Vec<AffineSubspace>> {
    if anchors.len() != subspaces.len() {
        return Err(Error::DimensionMismatch {
            context: "number of anchors",
            expected: subspaces.len(),
            got: anchors.len(),
        });
    }
    subspaces
        .into_iter()
        .zip(anchors)
        .map(|(s, a)| AffineSubspace::new(a, s))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn algorithm_parsing() {
        assert_eq!("ryu".parse::<Algorithm>().unwrap(), Algorithm::Ryu);
        assert_eq!("MT".parse::<Algorithm>().unwrap(), Algorithm::Mt);
        assert!("dr".parse::<Algorithm>().is_err());
    }

    #[test]
    fn affine_map_relaxation() {
        let t = AffineMap::new(Matrix::from_diag(&[0.0, 2.0]), vec![1.0, -1.0]).unwrap();
        let r = t.relaxed(0.25);
        let y = r.apply(&[4.0, 4.0]).unwrap();
        // 0.75 * x + 0.25 * (Tx)
        assert!((y[0] - (3.0 + 0.25)).abs() < 1e-15);
        assert!((y[1] - (3.0 + 0.25 * 7.0)).abs() < 1e-15);
        assert!(AffineMap::new(Matrix::identity(2), vec![0.0]).is_err());
    }

    #[test]
    fn lift_with_zero_offset_is_identity() {
        let fix = FixDecomposition::from_parts(Matrix::identity(2), Matrix::zeros(2, 2));
        let map = AffineMap::linear(Matrix::identity(2));
        let lifted = affine_lift(&map, fix, 1e-8).unwrap();
        assert_eq!(lifted.shift, vec![0.0, 0.0]);
    }

    #[test]
    fn lift_detects_inconsistency() {
        // T(x) = x + b has no fixed point when b ≠ 0.
        let fix = FixDecomposition::from_parts(Matrix::identity(2), Matrix::zeros(2, 2));
        let map = AffineMap::new(Matrix::identity(2), vec![1.0, 0.0]).unwrap();
        assert!(matches!(
            affine_lift(&map, fix, 1e-8),
            Err(Error::Inconsistent { .. })
        ));
    }

    #[test]
    fn diagonal_projector_is_projector() {
        let p = diagonal_projector(2, 3);
        assert!((&(&p * &p) - &p).frobenius_norm() < 1e-15);
        let x = p.mul_vec(&[1.0, 0.0, 2.0, 0.0, 3.0, 3.0]);
        assert!((x[0] - 2.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
    }
}
