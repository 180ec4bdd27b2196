//! Small primal-dual interior-point solver for block-diagonal real SDPs.
//!
//! Solves `min ⟨C, X⟩ s.t. ⟨A_i, X⟩ = b_i, X ⪰ 0` together with its dual
//! `max bᵀy s.t. C − Σ y_i A_i ⪰ 0`, using the HKM search direction with a
//! Mehrotra predictor-corrector. Hermitian problems are handled through the
//! real embedding `H ↦ [[Re H, −Im H], [Im H, Re H]]`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

use super::fock::CMatrix;

type Block = DMatrix<f64>;

/// Linear constraints shared by every solve; only the cost changes.
#[derive(Clone, Debug)]
pub struct SdpProblem {
    pub sizes: Vec<usize>,
    /// `a[i][k]` is block `k` of constraint matrix `A_i`.
    pub a: Vec<Vec<Block>>,
    pub b: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub x: Vec<Block>,
    pub y: Vec<f64>,
    pub z: Vec<Block>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub iterations: usize,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct SdpSettings {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub step_fraction: f64,
}

impl Default for SdpSettings {
    fn default() -> Self {
        Self { tolerance: 1e-10, max_iterations: 100, step_fraction: 0.98 }
    }
}

fn dot(a: &[Block], b: &[Block]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn sym(m: &Block) -> Block {
    (m + m.transpose()) * 0.5
}

fn fro(a: &[Block]) -> f64 {
    dot(a, a).sqrt()
}

impl SdpProblem {
    pub fn constraints(&self) -> usize {
        self.b.len()
    }

    fn apply(&self, x: &[Block]) -> DVector<f64> {
        DVector::from_iterator(self.b.len(), self.a.iter().map(|ai| dot(ai, x)))
    }

    fn adjoint(&self, y: &DVector<f64>) -> Vec<Block> {
        let mut out: Vec<Block> = self.sizes.iter().map(|&n| Block::zeros(n, n)).collect();
        for (ai, &yi) in self.a.iter().zip(y.iter()) {
            for (o, a) in out.iter_mut().zip(ai) {
                *o += a * yi;
            }
        }
        out
    }

    /// Solves the problem for cost `c`.
    pub fn solve(&self, c: &[Block], settings: &SdpSettings) -> Result<SdpSolution> {
        let m = self.b.len();
        let b = DVector::from_column_slice(&self.b);
        let n_total: usize = self.sizes.iter().sum();
        let bnorm = b.norm();
        let cnorm = fro(c);

        let mut xi = 10f64.max((n_total as f64).sqrt());
        let mut eta = 10f64.max((n_total as f64).sqrt()).max(cnorm);
        for (ai, bi) in self.a.iter().zip(&self.b) {
            let an = fro(ai);
            xi = xi.max(n_total as f64 * (1.0 + bi.abs()) / (1.0 + an));
            eta = eta.max(an);
        }
        let mut x: Vec<Block> = self.sizes.iter().map(|&n| Block::identity(n, n) * xi).collect();
        let mut z: Vec<Block> = self.sizes.iter().map(|&n| Block::identity(n, n) * eta).collect();
        let mut y = DVector::zeros(m);

        let mut iterations = 0;
        let mut best: Option<(f64, SdpSolution)> = None;
        let mut stalled = 0;
        loop {
            let rp = &b - self.apply(&x);
            let aty = self.adjoint(&y);
            let rd: Vec<Block> = c.iter().zip(&aty).zip(&z).map(|((c, a), z)| c - a - z).collect();
            let mu = dot(&x, &z) / n_total as f64;
            let pobj = dot(c, &x);
            let dobj = b.dot(&y);
            let pinf = rp.norm() / (1.0 + bnorm);
            let dinf = fro(&rd) / (1.0 + cnorm);
            let scale = 1.0 + pobj.abs() + dobj.abs();
            let gap = ((pobj - dobj).abs() / scale).max(dot(&x, &z) / scale);
            let merit = gap.max(pinf).max(dinf);
            if best.as_ref().is_none_or(|(m, _)| merit < *m) {
                stalled = 0;
                best = Some((
                    merit,
                    SdpSolution {
                        x: x.clone(),
                        y: y.iter().copied().collect(),
                        z: z.clone(),
                        primal_objective: pobj,
                        dual_objective: dobj,
                        iterations,
                        primal_infeasibility: pinf,
                        dual_infeasibility: dinf,
                    },
                ));
            } else {
                stalled += 1;
            }
            let best_merit = best.as_ref().map_or(f64::INFINITY, |(m, _)| *m);
            // Rounding error eventually dominates near the boundary; once the
            // best iterate is good, a few non-improving steps end the solve.
            let done = merit < settings.tolerance || (best_merit < ACCEPTABLE && stalled >= 3);
            if done || iterations >= settings.max_iterations {
                return finish(best, iterations);
            }
            iterations += 1;

            let Some(zinv) = z.iter().map(|zk| zk.clone().try_inverse()).collect::<Option<Vec<Block>>>() else {
                return finish(best, iterations);
            };

            // Schur complement M_ij = Σ_k tr(A_i X A_j Z⁻¹)
            let xaz: Vec<Vec<Block>> = self
                .a
                .iter()
                .map(|aj| aj.iter().zip(&x).zip(&zinv).map(|((a, x), zi)| x * a * zi).collect())
                .collect();
            let mut schur = DMatrix::zeros(m, m);
            for i in 0..m {
                for j in i..m {
                    let v = dot(&self.a[i], &xaz[j]);
                    schur[(i, j)] = v;
                    schur[(j, i)] = v;
                }
            }
            let Some(chol) = schur.cholesky() else {
                return finish(best, iterations);
            };

            let x_rd_zinv: Vec<Block> =
                x.iter().zip(&rd).zip(&zinv).map(|((x, r), zi)| x * r * zi).collect();
            let ax_rd = self.apply(&x_rd_zinv);

            let direction = |h: &[Block]| {
                let rhs = &rp - self.apply(h) + &ax_rd;
                let dy = chol.solve(&rhs);
                let atdy = self.adjoint(&dy);
                let dz: Vec<Block> = rd.iter().zip(&atdy).map(|(r, a)| r - a).collect();
                let dx: Vec<Block> = h
                    .iter()
                    .zip(&x)
                    .zip(&dz)
                    .zip(&zinv)
                    .map(|(((h, x), dz), zi)| sym(&(h - x * dz * zi)))
                    .collect();
                (dx, dy, dz)
            };

            // predictor
            let h_aff: Vec<Block> = x.iter().map(|x| -x.clone()).collect();
            let (dx_a, _, dz_a) = direction(&h_aff);
            let ap = step_length(&x, &dx_a, 1.0);
            let ad = step_length(&z, &dz_a, 1.0);
            let mu_aff = x
                .iter()
                .zip(&dx_a)
                .zip(z.iter().zip(&dz_a))
                .map(|((x, dx), (z, dz))| (x + dx * ap).dot(&(z + dz * ad)))
                .sum::<f64>()
                / n_total as f64;
            let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

            // corrector
            let h: Vec<Block> = zinv
                .iter()
                .zip(&x)
                .zip(dx_a.iter().zip(&dz_a))
                .map(|((zi, x), (dx, dz))| zi * (sigma * mu) - x - dx * dz * zi)
                .collect();
            let (dx, dy, dz) = direction(&h);
            let ap = step_length(&x, &dx, settings.step_fraction);
            let ad = step_length(&z, &dz, settings.step_fraction);
            for (xk, d) in x.iter_mut().zip(&dx) {
                *xk += d * ap;
                *xk = sym(xk);
            }
            for (zk, d) in z.iter_mut().zip(&dz) {
                *zk += d * ad;
                *zk = sym(zk);
            }
            y += dy * ad;
        }
    }
}

/// Merit below which an iterate is returned when progress stops.
const ACCEPTABLE: f64 = 1e-7;

fn finish(best: Option<(f64, SdpSolution)>, iterations: usize) -> Result<SdpSolution> {
    match best {
        Some((m, s)) if m < ACCEPTABLE => Ok(s),
        Some((m, _)) => Err(Error::NonConvergence { iterations, gap: m }),
        None => Err(Error::NonConvergence { iterations, gap: f64::INFINITY }),
    }
}

/// Largest step `a ≤ 1` with `X + a·ΔX ⪰ 0`, scaled back by `fraction`.
fn step_length(x: &[Block], dx: &[Block], fraction: f64) -> f64 {
    let mut alpha: f64 = 1.0;
    for (xk, dk) in x.iter().zip(dx) {
        let Some(ch) = xk.clone().cholesky() else {
            return 0.0;
        };
        let l = ch.l();
        let linv = l.try_inverse().unwrap_or_else(|| Block::identity(xk.nrows(), xk.ncols()));
        let w = sym(&(&linv * dk * linv.transpose()));
        let lmin = w.symmetric_eigenvalues().min();
        if lmin < 0.0 {
            alpha = alpha.min(-fraction / lmin);
        }
    }
    alpha.min(1.0)
}

/// Real embedding of a complex matrix.
pub fn embed(h: &CMatrix) -> Block {
    let n = h.nrows();
    let mut out = Block::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let v = h[(i, j)];
            out[(i, j)] = v.re;
            out[(i + n, j + n)] = v.re;
            out[(i, j + n)] = -v.im;
            out[(i + n, j)] = v.im;
        }
    }
    out
}

/// Inverse of [`embed`] that averages the redundant copies, so any real
/// PSD `X` maps to a Hermitian PSD matrix.
pub fn unembed(x: &Block) -> CMatrix {
    let n = x.nrows() / 2;
    CMatrix::from_fn(n, n, |i, j| {
        Complex64::new(
            (x[(i, j)] + x[(i + n, j + n)]) / 2.0,
            (x[(i + n, j)] - x[(i, j + n)]) / 2.0,
        )
    })
}

/// Hermitian SDP expressed with complex blocks: `min Σ Re Tr(C_k ρ_k)` subject
/// to `|Σ_k Re Tr(O_{ik} ρ_k) − b_i| ≤ δ_i` with Hermitian `O_{ik}`.
///
/// Constraints with `δ_i > 0` become a pair of equalities with scalar slack
/// blocks appended after the matrix blocks.
#[derive(Clone, Debug)]
pub struct HermitianSdp {
    pub real: SdpProblem,
    matrix_blocks: usize,
}

#[derive(Clone, Debug)]
pub struct HermitianSolution {
    pub rho: Vec<CMatrix>,
    pub y: Vec<f64>,
    pub dual_objective: f64,
    pub primal_objective: f64,
}

impl HermitianSdp {
    pub fn new(ops: Vec<Vec<CMatrix>>, b: Vec<f64>) -> Self {
        let tol = vec![0.0; b.len()];
        Self::with_tolerances(ops, b, &tol)
    }

    pub fn with_tolerances(ops: Vec<Vec<CMatrix>>, b: Vec<f64>, tol: &[f64]) -> Self {
        let matrix_blocks = ops[0].len();
        let n_slack = 2 * tol.iter().filter(|&&d| d > 0.0).count();
        let mut sizes: Vec<usize> = ops[0].iter().map(|o| 2 * o.nrows()).collect();
        sizes.extend(std::iter::repeat_n(1, n_slack));
        let mut a = Vec::new();
        let mut rhs = Vec::new();
        let mut slack = 0;
        for (i, row) in ops.iter().enumerate() {
            let base: Vec<Block> = row
                .iter()
                .map(|o| embed(o) * 0.5)
                .chain(std::iter::repeat_n(Block::zeros(1, 1), n_slack))
                .collect();
            if tol[i] > 0.0 {
                for sign in [1.0, -1.0] {
                    let mut r = base.clone();
                    r[matrix_blocks + slack][(0, 0)] = sign;
                    slack += 1;
                    a.push(r);
                    rhs.push(b[i] + sign * tol[i]);
                }
            } else {
                a.push(base);
                rhs.push(b[i]);
            }
        }
        Self { real: SdpProblem { sizes, a, b: rhs }, matrix_blocks }
    }

    pub fn solve(&self, cost: &[CMatrix], settings: &SdpSettings) -> Result<HermitianSolution> {
        let mut c: Vec<Block> = cost.iter().map(|h| embed(&herm(h)) * 0.5).collect();
        c.extend(self.real.sizes[self.matrix_blocks..].iter().map(|&n| Block::zeros(n, n)));
        let s = self.real.solve(&c, settings)?;
        let rho = s
            .x
            .iter()
            .take(self.matrix_blocks)
            .map(|x| super::fock::hermitian_map(&unembed(x), |l| l.max(0.0)))
            .collect();
        Ok(HermitianSolution {
            rho,
            y: s.y,
            dual_objective: s.dual_objective,
            primal_objective: s.primal_objective,
        })
    }
}

fn herm(h: &CMatrix) -> CMatrix {
    (h + h.adjoint()) * Complex64::new(0.5, 0.0)
}
