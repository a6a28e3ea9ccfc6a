use super::{
    affine_sets, linear_sets, validate_sets, Algorithm, AffineMap, FixDecomposition, Splitting,
};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::subspaces::{intersect_pair, AffineSubspace, Subspace};

/// Malitsky–Tam splitting for `n ≥ 3` (affine) subspaces; governing space `X^{n−1}`.
#[derive(Debug, Clone)]
pub struct MtProblem {
    sets: Vec<AffineSubspace>,
    intersection: AffineSubspace,
}

impl MtProblem {
    pub fn new(subspaces: Vec<Subspace>) -> Result<Self> {
        Self::from_sets(linear_sets(subspaces))
    }

    pub fn affine(subspaces: Vec<Subspace>, anchors: &[Vec<f64>]) -> Result<Self> {
        Self::from_sets(affine_sets(subspaces, anchors)?)
    }

    pub fn from_sets(sets: Vec<AffineSubspace>) -> Result<Self> {
        let (sets, intersection) = validate_sets(sets, 3)?;
        Ok(Self { sets, intersection })
    }

    fn d(&self) -> usize {
        self.intersection.ambient_dim()
    }

    /// `d x (n−1)d` selector of block `j` (0-based).
    fn selector(&self, j: usize) -> Matrix {
        let d = self.d();
        let mut e = Matrix::zeros(d, (self.sets.len() - 1) * d);
        e.set_block(0, j * d, &Matrix::identity(d));
        e
    }

    /// Block rows `R_1, …, R_n` of the forward matrix.
    fn forward_rows(&self) -> Vec<Matrix> {
        let n = self.sets.len();
        let p: Vec<&Matrix> = self.subspace_projectors();
        let mut rows: Vec<Matrix> = Vec::with_capacity(n);
        rows.push(p[0] * &self.selector(0));
        for i in 1..n - 1 {
            let inner = &(&rows[i - 1] + &self.selector(i)) - &self.selector(i - 1);
            rows.push(p[i] * &inner);
        }
        let last = &(&rows[0] + &rows[n - 2]) - &self.selector(n - 2);
        rows.push(p[n - 1] * &last);
        rows
    }
}

impl Splitting for MtProblem {
    fn algorithm(&self) -> Algorithm {
        Algorithm::Mt
    }

    fn sets(&self) -> &[AffineSubspace] {
        &self.sets
    }

    fn intersection(&self) -> &AffineSubspace {
        &self.intersection
    }

    /// `x_1 = P_1 z_1`, `x_i = P_i(x_{i−1} + z_i − z_{i−1})`, `x_n = P_n(x_1 + x_{n−1} − z_{n−1})`.
    fn forward(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.check_governing(z)?;
        let d = self.d();
        let n = self.sets.len();
        let block = |i: usize| &z[i * d..(i + 1) * d];
        let mut out = Vec::with_capacity(n * d);
        out.extend(self.sets[0].project(block(0))?);
        let mut arg = vec![0.0; d];
        for i in 1..n - 1 {
            let (zi, zp) = (block(i), block(i - 1));
            let prev = &out[(i - 1) * d..i * d];
            for k in 0..d {
                arg[k] = prev[k] + zi[k] - zp[k];
            }
            let xi = self.sets[i].project(&arg)?;
            out.extend(xi);
        }
        let zl = block(n - 2);
        for k in 0..d {
            arg[k] = out[k] + out[(n - 2) * d + k] - zl[k];
        }
        let xn = self.sets[n - 1].project(&arg)?;
        out.extend(xn);
        Ok(out)
    }

    /// `z_i ↦ z_i + x_{i+1} − x_i` for `i = 1, …, n−1`.
    fn step(&self, z: &[f64]) -> Result<Vec<f64>> {
        let x = self.forward(z)?;
        let d = self.d();
        let mut out = z.to_vec();
        for (k, o) in out.iter_mut().enumerate() {
            *o += x[k + d] - x[k];
        }
        Ok(out)
    }

    fn forward_matrix(&self) -> Result<Matrix> {
        let grid: Vec<Vec<Matrix>> = self.forward_rows().into_iter().map(|r| vec![r]).collect();
        Matrix::from_blocks(&grid)
    }

    fn matrix(&self) -> Result<AffineMap> {
        let rows = self.forward_rows();
        let m = self.governing_dim();
        let mut linear = Matrix::identity(m);
        let d = self.d();
        for i in 0..rows.len() - 1 {
            let diff = &rows[i + 1] - &rows[i];
            let current = linear.block(i * d, 0, d, m);
            linear.set_block(i * d, 0, &(&current + &diff));
        }
        let offset = if self.is_affine() {
            self.step(&vec![0.0; m])?
        } else {
            vec![0.0; m]
        };
        AffineMap::new(linear, offset)
    }

    /// `P_Fix = (1/(n−1)) [P_Z]_{ij} + P_E`, where `E = ran Ψ ∩ (X^{n−2} × U_n^⊥)` and
    /// `Ψ(y_1, …, y_{n−1}) = (y_1, y_1 + y_2, …)` on `U_1^⊥ × … × U_{n−1}^⊥`.
    fn linear_fix_projector(&self) -> Result<FixDecomposition> {
        let d = self.d();
        let n = self.sets.len();
        let k = n - 1;
        let pz = self.intersection.direction().projector().scale(1.0 / k as f64);
        let z_grid: Vec<Vec<Matrix>> = (0..k).map(|_| vec![pz.clone(); k]).collect();
        let z_block = Matrix::from_blocks(&z_grid)?;

        // Ψ restricted to the complements: block (i, j) = P_{U_j^⊥} for j ≤ i.
        let perps: Vec<Subspace> = self.sets.iter().map(|s| s.direction().complement()).collect();
        let mut psi = Matrix::zeros(k * d, k * d);
        for i in 0..k {
            for (j, perp) in perps.iter().enumerate().take(i + 1) {
                psi.set_block(i * d, j * d, perp.projector());
            }
        }
        let ran_psi = Subspace::from_basis(&psi)?;
        let mut tail = vec![Subspace::whole(d); k - 1];
        tail.push(perps[n - 1].clone());
        let tail_refs: Vec<&Subspace> = tail.iter().collect();
        let last_perp = Subspace::product(&tail_refs);
        let e = intersect_pair(&ran_psi, &last_perp)?;
        Ok(FixDecomposition::from_parts(z_block, e.into_projector()))
    }

    fn seed_point(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.check_governing(z)?;
        let d = self.d();
        let k = self.sets.len() - 1;
        let mut p = vec![0.0; d];
        for block in z.chunks(d) {
            for (pi, v) in p.iter_mut().zip(block) {
                *pi += v;
            }
        }
        p.iter_mut().for_each(|v| *v /= k as f64);
        Ok(p)
    }
}

impl TryFrom<Vec<Subspace>> for MtProblem {
    type Error = Error;

    fn try_from(subspaces: Vec<Subspace>) -> Result<Self> {
        Self::new(subspaces)
    }
}
