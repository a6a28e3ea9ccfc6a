//! Orthogonal projectors onto linear and affine subspaces of `R^d`.
//!
//! A [`Subspace`] is stored by its projector only. Intersections and sums are
//! computed with the Anderson–Duffin parallel-sum formulas, which only need
//! projectors and a pseudoinverse.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, DEFAULT_RANK_TOL};

const MAX_GENERATION_RETRIES: usize = 100;

/// Symmetry tolerance per ambient dimension: `‖P − Pᵀ‖_F ≤ SYM_TOL · d`.
pub const SYM_TOL: f64 = 1e-10;
/// Idempotency tolerance per ambient dimension: `‖P² − P‖_F ≤ IDEM_TOL · d`.
pub const IDEM_TOL: f64 = 1e-8;

/// A linear subspace of `R^d`, represented by its orthogonal projector.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    projector: Matrix,
}

impl Subspace {
    /// Wraps a matrix after checking that it is a symmetric idempotent `d x d` matrix.
    pub fn from_projector(projector: Matrix) -> Result<Self> {
        if !projector.is_square() {
            return Err(Error::NotSquare {
                operation: "subspace projector",
                rows: projector.rows(),
                cols: projector.cols(),
            });
        }
        let d = projector.rows() as f64;
        let asym = (&projector - &projector.transpose()).frobenius_norm();
        if asym > SYM_TOL * d.max(1.0) {
            return Err(Error::NotAProjector(format!("asymmetry {asym:.3e}")));
        }
        let drift = (&(&projector * &projector) - &projector).frobenius_norm();
        if drift > IDEM_TOL * d.max(1.0) {
            return Err(Error::NotAProjector(format!(
                "idempotency defect {drift:.3e}"
            )));
        }
        Ok(Self { projector })
    }

    /// Span of the columns of a `d x k` matrix: `P = B B†`.
    pub fn from_basis(columns: &Matrix) -> Result<Self> {
        let d = columns.rows();
        if columns.cols() == 0 || columns.max_abs() == 0.0 {
            return Ok(Self::zero(d));
        }
        let p = columns * &linalg::pinv(columns)?;
        Self::from_projector(p.symmetrized())
    }

    pub fn whole(d: usize) -> Self {
        Self {
            projector: Matrix::identity(d),
        }
    }

    pub fn zero(d: usize) -> Self {
        Self {
            projector: Matrix::zeros(d, d),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.projector.rows()
    }

    pub fn projector(&self) -> &Matrix {
        &self.projector
    }

    pub fn into_projector(self) -> Matrix {
        self.projector
    }

    /// Dimension of the subspace. The eigenvalues of a projector are 0 or 1,
    /// so the rank is the rounded trace; a relative rank cutoff would misread
    /// a round-off-sized projector as full rank.
    pub fn dim(&self) -> usize {
        self.projector.trace().round().max(0.0) as usize
    }

    /// Orthonormal basis as the columns of a `d x k` matrix.
    pub fn basis(&self) -> Result<Matrix> {
        let d = self.ambient_dim();
        let k = self.dim();
        if k == 0 {
            return Ok(Matrix::zeros(d, 0));
        }
        let dec = linalg::svd(&self.projector)?;
        Ok(dec.u.block(0, 0, d, k))
    }

    /// `U^⊥`, with projector `Id − P_U`.
    pub fn complement(&self) -> Self {
        Self {
            projector: &Matrix::identity(self.ambient_dim()) - &self.projector,
        }
    }

    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.projector.try_mul_vec(x)
    }

    /// `U ∩ V` via `P = 2 P_U (P_U + P_V)† P_V`, symmetrized.
    pub fn intersect(&self, other: &Subspace) -> Result<Self> {
        intersect_pair(self, other)
    }

    /// `U + V` via `P = Id − 2 (Id − P_U)(2 Id − P_U − P_V)† (Id − P_V)`, symmetrized.
    pub fn sum(&self, other: &Subspace) -> Result<Self> {
        sum_projector(self, other)
    }

    /// Cartesian product `U × V ⊂ R^{d_U + d_V}`.
    pub fn product(parts: &[&Subspace]) -> Self {
        let blocks: Vec<&Matrix> = parts.iter().map(|s| &s.projector).collect();
        Self {
            projector: Matrix::block_diag(&blocks),
        }
    }

    fn check_same_space(&self, other: &Subspace, context: &'static str) -> Result<()> {
        if self.ambient_dim() != other.ambient_dim() {
            return Err(Error::DimensionMismatch {
                context,
                expected: self.ambient_dim(),
                got: other.ambient_dim(),
            });
        }
        Ok(())
    }
}

pub fn complement(s: &Subspace) -> Subspace {
    s.complement()
}

/// Anderson–Duffin intersection projector of two subspaces.
pub fn intersect_pair(u: &Subspace, v: &Subspace) -> Result<Subspace> {
    u.check_same_space(v, "intersect_pair")?;
    let pu = &u.projector;
    let pv = &v.projector;
    let sum = pu + pv;
    if sum.max_abs() == 0.0 {
        return Ok(Subspace::zero(u.ambient_dim()));
    }
    let q = (&(pu * &linalg::pinv(&sum)?) * pv).scale(2.0);
    Subspace::from_projector(q.symmetrized())
}

/// Left fold of [`intersect_pair`] over the list.
pub fn intersect_all(list: &[Subspace]) -> Result<Subspace> {
    let (first, rest) = list
        .split_first()
        .ok_or_else(|| Error::InvalidInput("intersect_all needs at least one subspace".into()))?;
    rest.iter()
        .try_fold(first.clone(), |acc, s| intersect_pair(&acc, s))
}

/// Projector onto `U + V`.
pub fn sum_projector(u: &Subspace, v: &Subspace) -> Result<Subspace> {
    u.check_same_space(v, "sum_projector")?;
    let id = Matrix::identity(u.ambient_dim());
    let cu = &id - &u.projector;
    let cv = &id - &v.projector;
    let mid = &cu + &cv;
    if mid.max_abs() == 0.0 {
        return Ok(Subspace::whole(u.ambient_dim()));
    }
    let q = &id - &(&(&cu * &linalg::pinv(&mid)?) * &cv).scale(2.0);
    Subspace::from_projector(q.symmetrized())
}

/// Span of `k` standard-Gaussian vectors in `R^d`, redrawn until the basis has full rank.
pub fn random_subspace<R: Rng + ?Sized>(d: usize, k: usize, rng: &mut R) -> Result<Subspace> {
    if k == 0 || k > d {
        return Err(Error::InvalidInput(format!(
            "random subspace needs 1 <= k <= d, got k={k}, d={d}"
        )));
    }
    for _ in 0..MAX_GENERATION_RETRIES {
        // Rows of a k x d Gaussian matrix, used as basis columns.
        let data: Vec<f64> = (0..k * d).map(|_| rng.sample(StandardNormal)).collect();
        let b = Matrix::new(k, d, data)?;
        if linalg::rank(&b, DEFAULT_RANK_TOL)? < k {
            continue;
        }
        let s = Subspace::from_basis(&b.transpose())?;
        if s.dim() == k {
            return Ok(s);
        }
    }
    Err(Error::Generation(format!(
        "no rank-{k} basis in R^{d} after {MAX_GENERATION_RETRIES} draws"
    )))
}

/// True iff every subspace dimension is at least `1 + ⌈2d/3⌉`, which makes
/// three generic subspaces meet in a nontrivial intersection.
pub fn feasible_dims(d: usize, dims: &[usize]) -> bool {
    if d == 0 || dims.is_empty() {
        return false;
    }
    let bound = min_feasible_dim(d);
    dims.iter().all(|&k| k >= bound && k <= d)
}

/// `1 + ⌈2d/3⌉`.
pub fn min_feasible_dim(d: usize) -> usize {
    1 + (2 * d).div_ceil(3)
}

/// An affine subspace `v + U`, stored with the minimal-norm anchor `P_{U^⊥} v`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineSubspace {
    anchor: Vec<f64>,
    direction: Subspace,
}

impl AffineSubspace {
    pub fn new(anchor: &[f64], direction: Subspace) -> Result<Self> {
        if anchor.len() != direction.ambient_dim() {
            return Err(Error::DimensionMismatch {
                context: "affine anchor",
                expected: direction.ambient_dim(),
                got: anchor.len(),
            });
        }
        if let Some(i) = anchor.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: i, col: 0 });
        }
        let along = direction.projector.mul_vec(anchor);
        let anchor = anchor.iter().zip(&along).map(|(a, p)| a - p).collect();
        Ok(Self { anchor, direction })
    }

    /// The linear subspace itself, anchored at the origin.
    pub fn linear(direction: Subspace) -> Self {
        Self {
            anchor: vec![0.0; direction.ambient_dim()],
            direction,
        }
    }

    /// Minimal-norm point of the affine subspace.
    pub fn anchor(&self) -> &[f64] {
        &self.anchor
    }

    /// The parallel linear subspace `V − V`.
    pub fn direction(&self) -> &Subspace {
        &self.direction
    }

    pub fn ambient_dim(&self) -> usize {
        self.direction.ambient_dim()
    }

    pub fn is_linear(&self) -> bool {
        self.anchor.iter().all(|&v| v == 0.0)
    }

    /// `P_{v+U}(x) = v + P_U(x − v)`, which equals `P_U x + P_{U^⊥} v`.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = self.direction.project(x)?;
        for (yi, ai) in y.iter_mut().zip(&self.anchor) {
            *yi += ai;
        }
        Ok(y)
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> Result<bool> {
        let p = self.project(x)?;
        Ok(linalg::distance(&p, x) <= tol)
    }
}

/// Projection onto either kind of subspace.
pub trait Project {
    fn project(&self, x: &[f64]) -> Result<Vec<f64>>;
}

impl Project for Subspace {
    fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        Subspace::project(self, x)
    }
}

impl Project for AffineSubspace {
    fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        AffineSubspace::project(self, x)
    }
}

pub fn project<S: Project + ?Sized>(s: &S, x: &[f64]) -> Result<Vec<f64>> {
    s.project(x)
}

/// Intersection of affine subspaces, stored as its minimal-norm point plus
/// the intersection of the parallel spaces.
///
/// Fails with [`Error::Inconsistent`] when the sets do not meet.
pub fn intersect_affine(sets: &[AffineSubspace], tol: f64) -> Result<AffineSubspace> {
    let first = sets
        .first()
        .ok_or_else(|| Error::InvalidInput("intersect_affine needs at least one set".into()))?;
    let d = first.ambient_dim();
    for s in sets {
        if s.ambient_dim() != d {
            return Err(Error::DimensionMismatch {
                context: "intersect_affine",
                expected: d,
                got: s.ambient_dim(),
            });
        }
    }
    let directions: Vec<Subspace> = sets.iter().map(|s| s.direction.clone()).collect();
    let z = intersect_all(&directions)?;
    if sets.iter().all(AffineSubspace::is_linear) {
        return Ok(AffineSubspace::linear(z));
    }
    // x ∈ v_i + U_i  ⇔  P_{U_i^⊥} x = anchor_i; solve the stacked system in least squares.
    let n = sets.len();
    let mut stacked = Matrix::zeros(n * d, d);
    let mut rhs = Vec::with_capacity(n * d);
    for (i, s) in sets.iter().enumerate() {
        stacked.set_block(i * d, 0, &s.direction.complement().projector);
        rhs.extend_from_slice(&s.anchor);
    }
    let x = linalg::pinv(&stacked)?.mul_vec(&rhs);
    let residual = linalg::distance(&stacked.mul_vec(&x), &rhs);
    let scale = 1.0 + linalg::norm(&rhs);
    if residual > tol * scale {
        return Err(Error::Inconsistent {
            residual,
            tol: tol * scale,
        });
    }
    AffineSubspace::new(&x, z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: &Matrix, b: &Matrix, tol: f64) -> bool {
        (a - b).frobenius_norm() <= tol
    }

    fn line(d: usize, v: &[f64]) -> Subspace {
        assert_eq!(v.len(), d);
        Subspace::from_basis(&Matrix::column(v)).unwrap()
    }

    #[test]
    fn from_basis_examples() {
        let s = Subspace::from_basis(&Matrix::identity(3)).unwrap();
        assert!(close(s.projector(), &Matrix::identity(3), 1e-14));
        let x = line(2, &[1.0, 0.0]);
        assert!(close(x.projector(), &Matrix::from_diag(&[1.0, 0.0]), 1e-15));
        // One column b: P = b bᵀ / ‖b‖².
        let b = [1.0, 1.0];
        let oracle = (&Matrix::column(&b) * &Matrix::column(&b).transpose()).scale(0.5);
        assert!(close(line(2, &b).projector(), &oracle, 1e-15));
        let empty = Subspace::from_basis(&Matrix::zeros(4, 0)).unwrap();
        assert_eq!(empty.dim(), 0);
        assert_eq!(empty.ambient_dim(), 4);
    }

    #[test]
    fn from_projector_rejects_non_projectors() {
        assert!(Subspace::from_projector(Matrix::from_rows(&[&[1.0, 1.0], &[0.0, 1.0]])).is_err());
        assert!(Subspace::from_projector(Matrix::from_diag(&[2.0, 0.0])).is_err());
        assert!(Subspace::from_projector(Matrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn complement_examples() {
        assert!(close(Subspace::whole(3).complement().projector(), &Matrix::zeros(3, 3), 0.0));
        assert!(close(Subspace::zero(3).complement().projector(), &Matrix::identity(3), 0.0));
        let xc = line(2, &[1.0, 0.0]).complement();
        assert!(close(xc.projector(), &Matrix::from_diag(&[0.0, 1.0]), 1e-15));
    }

    #[test]
    fn intersect_pair_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = random_subspace(5, 3, &mut rng).unwrap();
        assert!(close(intersect_pair(&u, &u).unwrap().projector(), u.projector(), 1e-10));
        assert!(close(
            intersect_pair(&u, &Subspace::whole(5)).unwrap().projector(),
            u.projector(),
            1e-10
        ));
        let x = line(2, &[1.0, 0.0]);
        let diag = line(2, &[1.0, 1.0]);
        let z = intersect_pair(&x, &diag).unwrap();
        assert!(z.projector().max_abs() < 1e-14);
        assert!(intersect_pair(&x, &Subspace::whole(3)).is_err());
    }

    #[test]
    fn intersect_all_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = random_subspace(6, 4, &mut rng).unwrap();
        assert_eq!(intersect_all(std::slice::from_ref(&u)).unwrap(), u);
        let triple = intersect_all(&[u.clone(), u.clone(), u.clone()]).unwrap();
        assert!(close(triple.projector(), u.projector(), 1e-10));
        assert!(intersect_all(&[]).is_err());
    }

    #[test]
    fn sum_projector_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_subspace(4, 2, &mut rng).unwrap();
        assert!(close(
            sum_projector(&u, &Subspace::zero(4)).unwrap().projector(),
            u.projector(),
            1e-10
        ));
        let x = line(2, &[1.0, 0.0]);
        let y = line(2, &[0.0, 1.0]);
        assert!(close(sum_projector(&x, &y).unwrap().projector(), &Matrix::identity(2), 1e-14));
        for _ in 0..20 {
            let a = random_subspace(6, 2, &mut rng).unwrap();
            let b = random_subspace(6, 3, &mut rng).unwrap();
            let direct = sum_projector(&a, &b).unwrap();
            let via = intersect_pair(&a.complement(), &b.complement()).unwrap().complement();
            assert!(close(direct.projector(), via.projector(), 1e-9));
            assert_eq!(direct.dim(), 5);
        }
    }

    #[test]
    fn project_examples() {
        let x_axis = line(2, &[1.0, 0.0]);
        let p = x_axis.project(&[3.0, 4.0]).unwrap();
        assert!((p[0] - 3.0).abs() < 1e-15 && p[1].abs() < 1e-15);
        let shifted = AffineSubspace::new(&[0.0, 1.0], x_axis.clone()).unwrap();
        let q = shifted.project(&[3.0, 4.0]).unwrap();
        assert!((q[0] - 3.0).abs() < 1e-15 && (q[1] - 1.0).abs() < 1e-15);
        let qq = shifted.project(&q).unwrap();
        assert!(linalg::distance(&q, &qq) < 1e-15);
        assert!(x_axis.project(&[1.0]).is_err());
    }

    #[test]
    fn affine_anchor_is_canonical() {
        let x_axis = line(2, &[1.0, 0.0]);
        let a = AffineSubspace::new(&[5.0, 1.0], x_axis.clone()).unwrap();
        let b = AffineSubspace::new(&[-2.0, 1.0], x_axis).unwrap();
        assert_eq!(a.anchor(), &[0.0, 1.0]);
        assert_eq!(a, b);
    }

    #[test]
    fn affine_intersection_of_lines() {
        // y = 1 and x = 2 meet at (2, 1).
        let h = AffineSubspace::new(&[0.0, 1.0], line(2, &[1.0, 0.0])).unwrap();
        let v = AffineSubspace::new(&[2.0, 0.0], line(2, &[0.0, 1.0])).unwrap();
        let p = intersect_affine(&[h.clone(), v], 1e-10).unwrap();
        assert!(linalg::distance(p.anchor(), &[2.0, 1.0]) < 1e-12);
        assert_eq!(p.direction().dim(), 0);
        // Parallel distinct lines do not meet.
        let h2 = AffineSubspace::new(&[0.0, 3.0], line(2, &[1.0, 0.0])).unwrap();
        assert!(matches!(
            intersect_affine(&[h, h2], 1e-10),
            Err(Error::Inconsistent { .. })
        ));
    }

    #[test]
    fn random_subspace_rank_and_determinism() {
        let a = random_subspace(6, 5, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        let b = random_subspace(6, 5, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        assert_eq!(a.dim(), 5);
        assert_eq!(a.projector().as_slice(), b.projector().as_slice());
        assert!(random_subspace(3, 4, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
        assert!(random_subspace(3, 0, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn feasibility_bound() {
        assert!(feasible_dims(6, &[5, 5, 5]));
        assert!(!feasible_dims(6, &[4, 5, 5]));
        assert!(feasible_dims(3, &[3, 3, 3]));
        assert!(!feasible_dims(6, &[]));
        assert_eq!(min_feasible_dim(6), 5);
    }

    #[test]
    fn absorption_and_double_complement() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let u = random_subspace(6, 5, &mut rng).unwrap();
            let v = random_subspace(6, 4, &mut rng).unwrap();
            let z = intersect_pair(&u, &v).unwrap();
            let pz = z.projector();
            assert!(close(&(pz * u.projector()), pz, 1e-8));
            assert!(close(&(u.projector() * pz), pz, 1e-8));
            assert!(close(u.complement().complement().projector(), u.projector(), 1e-10));
            // dim(U + V) = dim U + dim V − dim(U ∩ V)
            let s = sum_projector(&u, &v).unwrap();
            assert_eq!(s.dim(), u.dim() + v.dim() - z.dim());
        }
    }

    #[test]
    fn projection_is_nonexpansive() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = random_subspace(6, 3, &mut rng).unwrap();
        for _ in 0..100 {
            let x: Vec<f64> = (0..6).map(|_| rng.random_range(-3.0..3.0)).collect();
            let y: Vec<f64> = (0..6).map(|_| rng.random_range(-3.0..3.0)).collect();
            let px = u.project(&x).unwrap();
            let py = u.project(&y).unwrap();
            assert!(linalg::distance(&px, &py) <= linalg::distance(&x, &y) + 1e-12);
        }
    }
}
