use super::{
    affine_sets, diagonal_projector, linear_sets, validate_sets, Algorithm, AffineMap,
    FixDecomposition, Splitting,
};
use crate::error::Result;
use crate::linalg::Matrix;
use crate::subspaces::{intersect_pair, sum_projector, AffineSubspace, Subspace};

/// Ryu splitting for three (affine) subspaces `U, V, W` of `R^d`; governing space `X^2`.
#[derive(Debug, Clone)]
pub struct RyuProblem {
    sets: Vec<AffineSubspace>,
    intersection: AffineSubspace,
}

impl RyuProblem {
    pub fn new(u: Subspace, v: Subspace, w: Subspace) -> Result<Self> {
        Self::from_sets(linear_sets(vec![u, v, w]))
    }

    /// Consistent affine problem `V_i = anchor_i + U_i`.
    pub fn affine(subspaces: [Subspace; 3], anchors: &[Vec<f64>]) -> Result<Self> {
        Self::from_sets(affine_sets(subspaces.into(), anchors)?)
    }

    pub fn from_sets(sets: Vec<AffineSubspace>) -> Result<Self> {
        if sets.len() != 3 {
            return Err(crate::Error::InvalidInput(format!(
                "Ryu splitting needs exactly 3 subspaces, got {}",
                sets.len()
            )));
        }
        let (sets, intersection) = validate_sets(sets, 3)?;
        Ok(Self { sets, intersection })
    }

    fn d(&self) -> usize {
        self.intersection.ambient_dim()
    }

    fn split<'a>(&self, z: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        z.split_at(self.d())
    }
}

impl Splitting for RyuProblem {
    fn algorithm(&self) -> Algorithm {
        Algorithm::Ryu
    }

    fn sets(&self) -> &[AffineSubspace] {
        &self.sets
    }

    fn intersection(&self) -> &AffineSubspace {
        &self.intersection
    }

    /// `x1 = P_U x`, `x2 = P_V(x1 + y)`, `x3 = P_W(x1 − x + x2 − y)`.
    fn forward(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.check_governing(z)?;
        let (x, y) = self.split(z);
        let [u, v, w] = [&self.sets[0], &self.sets[1], &self.sets[2]];
        let x1 = u.project(x)?;
        let a: Vec<f64> = x1.iter().zip(y).map(|(p, q)| p + q).collect();
        let x2 = v.project(&a)?;
        let b: Vec<f64> = (0..x.len()).map(|i| x1[i] - x[i] + x2[i] - y[i]).collect();
        let x3 = w.project(&b)?;
        let mut out = x1;
        out.extend(x2);
        out.extend(x3);
        Ok(out)
    }

    /// `(x, y) ↦ (x + x3 − x1, y + x3 − x2)`.
    fn step(&self, z: &[f64]) -> Result<Vec<f64>> {
        let m = self.forward(z)?;
        let d = self.d();
        let (x1, rest) = m.split_at(d);
        let (x2, x3) = rest.split_at(d);
        let mut out = z.to_vec();
        for i in 0..d {
            out[i] += x3[i] - x1[i];
            out[d + i] += x3[i] - x2[i];
        }
        Ok(out)
    }

    fn forward_matrix(&self) -> Result<Matrix> {
        let [pu, pv, pw] = projectors(self);
        let pvpu = pv * pu;
        let third_left = &(&(pw * pu) + &(pw * &pvpu)) - pw;
        let third_right = &(pw * pv) - pw;
        Matrix::from_blocks(&[
            vec![pu.clone(), Matrix::zeros(pu.rows(), pu.cols())],
            vec![pvpu, pv.clone()],
            vec![third_left, third_right],
        ])
    }

    /// ```text
    /// [ Id − P_U + P_W P_U + P_W P_V P_U − P_W      P_W P_V − P_W            ]
    /// [ P_W P_U + P_W P_V P_U − P_W − P_V P_U       Id + P_W P_V − P_V − P_W ]
    /// ```
    fn matrix(&self) -> Result<AffineMap> {
        let [pu, pv, pw] = projectors(self);
        let id = Matrix::identity(self.d());
        let pwpu = pw * pu;
        let pwpvpu = &(pw * pv) * pu;
        let pwpv = pw * pv;
        let common = &(&pwpu + &pwpvpu) - pw;
        let top_left = &(&id - pu) + &common;
        let top_right = &pwpv - pw;
        let bottom_left = &common - &(pv * pu);
        let bottom_right = &(&(&id + &pwpv) - pv) - pw;
        let linear = Matrix::from_blocks(&[vec![top_left, top_right], vec![bottom_left, bottom_right]])?;
        let offset = if self.is_affine() {
            self.step(&vec![0.0; 2 * self.d()])?
        } else {
            vec![0.0; 2 * self.d()]
        };
        AffineMap::new(linear, offset)
    }

    /// `P_Fix = [[P_Z, 0], [0, 0]] + P_E` with
    /// `E = (U^⊥ × V^⊥) ∩ (Δ^⊥ + ({0} × W^⊥))`.
    fn linear_fix_projector(&self) -> Result<FixDecomposition> {
        let d = self.d();
        let dirs: Vec<&Subspace> = self.sets.iter().map(AffineSubspace::direction).collect();
        let pz = self.intersection.direction().projector();
        let z_block = Matrix::block_diag(&[pz, &Matrix::zeros(d, d)]);

        let perp_product = Subspace::product(&[&dirs[0].complement(), &dirs[1].complement()]);
        let diag_perp = Subspace::from_projector(&Matrix::identity(2 * d) - &diagonal_projector(d, 2))?;
        let w_perp_lifted = Subspace::product(&[&Subspace::zero(d), &dirs[2].complement()]);
        let right = sum_projector(&diag_perp, &w_perp_lifted)?;
        let e = intersect_pair(&perp_product, &right)?;
        Ok(FixDecomposition::from_parts(z_block, e.into_projector()))
    }

    fn seed_point(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.check_governing(z)?;
        Ok(self.split(z).0.to_vec())
    }
}

fn projectors(p: &RyuProblem) -> [&Matrix; 3] {
    [
        p.sets[0].direction().projector(),
        p.sets[1].direction().projector(),
        p.sets[2].direction().projector(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{self, distance};
    use crate::subspaces::random_subspace;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-2.0..2.0)).collect()
    }

    fn random_problem(rng: &mut ChaCha8Rng) -> RyuProblem {
        RyuProblem::new(
            random_subspace(6, 5, rng).unwrap(),
            random_subspace(6, 5, rng).unwrap(),
            random_subspace(6, 5, rng).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn whole_space_forward() {
        let p = RyuProblem::new(Subspace::whole(3), Subspace::whole(3), Subspace::whole(3)).unwrap();
        let x = [1.0, -2.0, 0.5];
        let y = [0.3, 0.7, -1.1];
        let z: Vec<f64> = x.iter().chain(&y).copied().collect();
        let m = p.forward(&z).unwrap();
        let xy: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
        assert!(distance(&m[0..3], &x) < 1e-15);
        assert!(distance(&m[3..6], &xy) < 1e-15);
        assert!(distance(&m[6..9], &x) < 1e-15);
        // T(x, y) = (x, 0) and the second block row of the matrix vanishes.
        let t = p.step(&z).unwrap();
        assert!(distance(&t[0..3], &x) < 1e-15);
        assert!(linalg::norm(&t[3..6]) < 1e-15);
        let mat = p.matrix().unwrap();
        assert!(mat.linear.block(3, 0, 3, 6).max_abs() < 1e-15);
    }

    #[test]
    fn consensus_point_is_fixed() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_subspace(5, 3, &mut rng).unwrap();
        let p = RyuProblem::new(u.clone(), u.clone(), u.clone()).unwrap();
        let x = u.project(&random_vec(&mut rng, 5)).unwrap();
        let z: Vec<f64> = x.iter().copied().chain(std::iter::repeat(0.0).take(5)).collect();
        let m = p.forward(&z).unwrap();
        for b in 0..3 {
            assert!(distance(&m[5 * b..5 * b + 5], &x) < 1e-12);
        }
    }

    #[test]
    fn equal_subspaces_step() {
        // U = V = W gives T(x, y) = (x, y − P_U y).
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u = random_subspace(4, 2, &mut rng).unwrap();
        let p = RyuProblem::new(u.clone(), u.clone(), u.clone()).unwrap();
        for _ in 0..20 {
            let z = random_vec(&mut rng, 8);
            let t = p.step(&z).unwrap();
            let pu_y = u.project(&z[4..]).unwrap();
            let expect_y: Vec<f64> = z[4..].iter().zip(&pu_y).map(|(a, b)| a - b).collect();
            assert!(distance(&t[..4], &z[..4]) < 1e-12);
            assert!(distance(&t[4..], &expect_y) < 1e-12);
        }
    }

    #[test]
    fn matrices_match_functional_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let p = random_problem(&mut rng);
            let t = p.matrix().unwrap();
            let m = p.forward_matrix().unwrap();
            assert!(t.offset.iter().all(|&b| b == 0.0));
            // T = I + [−I 0 I; 0 −I I] M
            let d = 6;
            let id = Matrix::identity(d);
            let zero = Matrix::zeros(d, d);
            let diff = Matrix::from_blocks(&[
                vec![-&id, zero.clone(), id.clone()],
                vec![zero, -&id, id.clone()],
            ])
            .unwrap();
            let composed = &Matrix::identity(2 * d) + &(&diff * &m);
            assert!((&composed - &t.linear).max_abs() < 1e-13);
            let z = random_vec(&mut rng, 12);
            assert!(distance(&m.mul_vec(&z), &p.forward(&z).unwrap()) < 1e-12);
            assert!(distance(&t.apply(&z).unwrap(), &p.step(&z).unwrap()) < 1e-12);
        }
    }

    #[test]
    fn whole_space_fix_projector() {
        let p = RyuProblem::new(Subspace::whole(3), Subspace::whole(3), Subspace::whole(3)).unwrap();
        let fix = p.fix_projector().unwrap();
        let expect = Matrix::block_diag(&[&Matrix::identity(3), &Matrix::zeros(3, 3)]);
        assert!((&fix.fix_projector - &expect).max_abs() < 1e-12);
        assert!(fix.e_projector.max_abs() < 1e-12);
    }

    #[test]
    fn fix_projector_range_is_fixed() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..10 {
            let p = random_problem(&mut rng);
            let fix = p.fix_projector().unwrap();
            assert!(fix.invariant_defect() < 1e-8);
            let z = random_vec(&mut rng, 12);
            let pz = fix.project(&z).unwrap();
            assert!(distance(&p.step(&pz).unwrap(), &pz) < 1e-8);
        }
    }

    #[test]
    fn nonexpansive() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let p = random_problem(&mut rng);
        for _ in 0..100 {
            let a = random_vec(&mut rng, 12);
            let b = random_vec(&mut rng, 12);
            let ta = p.step(&a).unwrap();
            let tb = p.step(&b).unwrap();
            assert!(distance(&ta, &tb) <= distance(&a, &b) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn rejects_wrong_lengths() {
        let p = RyuProblem::new(Subspace::whole(2), Subspace::whole(2), Subspace::whole(2)).unwrap();
        assert!(p.step(&[1.0; 3]).is_err());
        assert!(RyuProblem::from_sets(linear_sets(vec![Subspace::whole(2); 4])).is_err());
        assert!(RyuProblem::new(Subspace::whole(2), Subspace::whole(3), Subspace::whole(2)).is_err());
    }
}
