//! Truncated Fock-space operators for the discrete-modulation solver.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

/// `⟨m|D(r)|k⟩` for real `r`, `m < rows`, `k < cols`.
///
/// Uses `d_{0,k} = e^{−r²/2}(−r)^k/√k!` and
/// `√(m+1)·d_{m+1,k} = √k·d_{m,k−1} + r·d_{m,k}`.
pub fn displacement_real(r: f64, rows: usize, cols: usize) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(rows, cols);
    let mut lf = 0.0;
    for k in 0..cols {
        if k > 0 {
            lf += (k as f64).ln();
        }
        d[(0, k)] = if r == 0.0 {
            if k == 0 { 1.0 } else { 0.0 }
        } else {
            let mag = (-r * r / 2.0 + k as f64 * r.ln() - 0.5 * lf).exp();
            if k % 2 == 0 { mag } else { -mag }
        };
    }
    for m in 0..rows.saturating_sub(1) {
        let s = ((m + 1) as f64).sqrt();
        for k in 0..cols {
            let mut v = r * d[(m, k)];
            if k > 0 {
                v += (k as f64).sqrt() * d[(m, k - 1)];
            }
            d[(m + 1, k)] = v / s;
        }
    }
    d
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` (Golub–Welsch free Newton
/// iteration on the Legendre polynomial).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p1 = z;
                p0 = 1.0;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Key-map region operators `R_z = (1/π)∫_{sector z} D(γ)ρ_th D(γ)† d²γ`
/// for the four quadrants centred on `zπ/2`, truncated to `dim` levels.
///
/// `nbar` is the thermal occupation standing in for trusted detector noise.
pub fn region_operators(dim: usize, nbar: f64) -> [CMatrix; 4] {
    let (k_levels, probs) = thermal_weights(dim, nbar);
    let rmax = (k_levels as f64).sqrt() + 8.0;
    let (xs, ws) = gauss_legendre(600);
    let mut radial = DMatrix::<f64>::zeros(dim, dim);
    for (x, w) in xs.iter().zip(&ws) {
        let r = (x + 1.0) / 2.0 * rmax;
        let wt = w * rmax / 2.0 * r;
        let d = displacement_real(r, dim, k_levels);
        let mut dp = d.clone();
        for k in 0..k_levels {
            dp.column_mut(k).scale_mut(probs[k]);
        }
        radial += (&dp * d.transpose()) * wt;
    }
    radial /= PI;
    std::array::from_fn(|z| {
        let c = z as f64 * PI / 2.0;
        CMatrix::from_fn(dim, dim, |m, n| {
            let k = m as i64 - n as i64;
            let ang = if k == 0 {
                Complex64::new(PI / 2.0, 0.0)
            } else {
                Complex64::from_polar(2.0 * (k as f64 * PI / 4.0).sin() / k as f64, k as f64 * c)
            };
            ang * radial[(m, n)]
        })
    })
}

fn thermal_weights(dim: usize, nbar: f64) -> (usize, Vec<f64>) {
    if nbar <= 0.0 {
        let k = dim + 10;
        let mut p = vec![0.0; k];
        p[0] = 1.0;
        return (k, p);
    }
    let q = nbar / (1.0 + nbar);
    let k = ((1e-16f64.ln() / q.ln()).ceil() as usize + dim + 10).max(dim + 10);
    let p = (0..k).map(|j| q.powi(j as i32) / (1.0 + nbar)).collect();
    (k, p)
}

/// Annihilation operator truncated to `dim` levels.
pub fn annihilation(dim: usize) -> CMatrix {
    CMatrix::from_fn(dim, dim, |m, n| {
        if n == m + 1 {
            Complex64::new((n as f64).sqrt(), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

pub fn number(dim: usize) -> CMatrix {
    CMatrix::from_fn(dim, dim, |m, n| Complex64::new(if m == n { m as f64 } else { 0.0 }, 0.0))
}

/// Eigen-decomposition helper: applies `f` to the eigenvalues of a Hermitian
/// matrix.
pub fn hermitian_map(a: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let h = (a + a.adjoint()) * Complex64::new(0.5, 0.0);
    let e = h.symmetric_eigen();
    let mut v = e.eigenvectors.clone();
    for (j, &l) in e.eigenvalues.iter().enumerate() {
        let s = f(l);
        v.column_mut(j).scale_mut(s);
    }
    // v·diag·U†
    let mut out = CMatrix::zeros(a.nrows(), a.ncols());
    out.gemm(Complex64::new(1.0, 0.0), &v, &e.eigenvectors.adjoint(), Complex64::new(0.0, 0.0));
    out
}

pub fn hermitian_eigenvalues(a: &CMatrix) -> Vec<f64> {
    let h = (a + a.adjoint()) * Complex64::new(0.5, 0.0);
    h.symmetric_eigenvalues().iter().copied().collect()
}

/// von Neumann entropy in bits, `−Σ λ log₂ λ` over positive eigenvalues.
pub fn entropy(a: &CMatrix) -> f64 {
    hermitian_eigenvalues(a)
        .into_iter()
        .filter(|&l| l > 0.0)
        .map(|l| -l * l.log2())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(10);
        let i: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert_relative_eq!(i, 2.0 / 19.0, epsilon = 1e-14);
        assert_relative_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn displacement_matches_coherent_amplitudes() {
        // ⟨m|D(r)|0⟩ = e^{−r²/2} r^m/√m!
        let r = 0.8;
        let d = displacement_real(r, 8, 4);
        let mut f = 1.0;
        for m in 0..8 {
            if m > 0 {
                f *= m as f64;
            }
            assert_relative_eq!(d[(m, 0)], (-r * r / 2.0).exp() * r.powi(m as i32) / f.sqrt(), epsilon = 1e-14);
        }
        // unitary columns in a big enough space
        let big = displacement_real(r, 60, 5);
        for k in 0..5 {
            assert_relative_eq!(big.column(k).norm(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn regions_resolve_identity() {
        for nbar in [0.0, 1.33] {
            let r = region_operators(11, nbar);
            let sum = &r[0] + &r[1] + &r[2] + &r[3];
            for m in 0..11 {
                for n in 0..11 {
                    let want = if m == n { 1.0 } else { 0.0 };
                    assert!((sum[(m, n)] - Complex64::new(want, 0.0)).norm() < 1e-10, "{nbar} {m} {n}");
                }
            }
            for z in &r {
                assert!(hermitian_eigenvalues(z).iter().all(|&l| l > -1e-12));
            }
        }
    }

    #[test]
    fn entropy_of_maximally_mixed() {
        let m = CMatrix::identity(4, 4) * Complex64::new(0.25, 0.0);
        assert_relative_eq!(entropy(&m), 2.0, epsilon = 1e-12);
    }
}
