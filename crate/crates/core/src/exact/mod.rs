//! Ground-truth engines: dense biorthogonal eigendecompositions, sector ED
//! with boundary flux, free-fermion solvers, spectral winding numbers,
//! correlation-matrix Renyi entropies, and the analytic ring toy model.

pub mod ed;
pub mod freefermion;
pub mod spectral;
pub mod toy;

use faer::linalg::solvers::{Eigen, Solve};
use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Right/left eigenpairs of a non-Hermitian matrix with complex energies.
///
/// Left vectors are stored as the rows of `V^{-1}`, so biorthonormality
/// `<L_n|R_m> = delta_nm` and completeness `sum_n |R_n><L_n| = 1` hold by
/// construction up to the reported residual.
#[derive(Debug, Clone)]
pub struct BiorthogonalDecomposition {
    /// Eigenvalues sorted by ascending real part (imaginary part breaks ties).
    pub eigenvalues: Vec<Complex64>,
    /// Right eigenvectors as columns.
    pub right: Mat<Complex64>,
    /// `V^{-1}`; row n is the bra `<L_n|`.
    pub left_rows: Mat<Complex64>,
    /// Max-norm deviation of `V V^{-1}` and `V^{-1} V` from the identity.
    pub residual: f64,
}

impl BiorthogonalDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Component i of the n-th right eigenvector.
    pub fn right_component(&self, n: usize, i: usize) -> Complex64 {
        self.right[(i, n)]
    }

    /// Component i of the n-th left eigenvector |L_n> (ket form), i.e.
    /// conj of row n of V^{-1}.
    pub fn left_component(&self, n: usize, i: usize) -> Complex64 {
        self.left_rows[(n, i)].conj()
    }

    /// `<L_n| A |R_m>` for a dense operator in the same basis.
    pub fn sandwich(&self, a: &Mat<Complex64>, n: usize, m: usize) -> Complex64 {
        let d = self.dim();
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..d {
            let mut row = Complex64::new(0.0, 0.0);
            for j in 0..d {
                row += a[(i, j)] * self.right[(j, m)];
            }
            acc += self.left_rows[(n, i)] * row;
        }
        acc
    }

    /// Sector thermal expectation of the energy at inverse temperature
    /// `beta`, computed with weights shifted by the lowest real part to
    /// avoid overflow. Returns (energy, |Im Z| / |Re Z|).
    pub fn thermal_energy(&self, beta: f64) -> (Complex64, f64) {
        let e0 = self
            .eigenvalues
            .iter()
            .map(|e| e.re)
            .fold(f64::INFINITY, f64::min);
        let mut z = Complex64::new(0.0, 0.0);
        let mut ez = Complex64::new(0.0, 0.0);
        for &e in &self.eigenvalues {
            let w = (-(e - e0) * beta).exp();
            z += w;
            ez += e * w;
        }
        (ez / z, z.im.abs() / z.re.abs().max(f64::MIN_POSITIVE))
    }
}

/// Partition-function reality diagnostic.
#[derive(Debug, Clone, Copy)]
pub struct PartitionReality {
    /// `Z * exp(beta * shift)`: the partition sum with every level shifted
    /// by the lowest real part (the bare sum overflows at large beta).
    pub z_shifted: Complex64,
    /// The shift applied, i.e. the lowest real part of the spectrum.
    pub shift: f64,
    pub imag_ratio: f64,
}

/// `Z = sum_i exp(-beta E_i)` reality check. PT-symmetric spectra come in
/// conjugate pairs, so the imaginary parts cancel.
pub fn partition_reality_check(
    decomp: &BiorthogonalDecomposition,
    beta: f64,
) -> PartitionReality {
    let shift = decomp
        .eigenvalues
        .iter()
        .map(|e| e.re)
        .fold(f64::INFINITY, f64::min);
    let mut z = Complex64::new(0.0, 0.0);
    for &e in &decomp.eigenvalues {
        z += (-(e - shift) * beta).exp();
    }
    PartitionReality {
        z_shifted: z,
        shift,
        imag_ratio: z.im.abs() / z.re.abs().max(f64::MIN_POSITIVE),
    }
}

/// Dense eigendecomposition with left vectors from matrix inversion.
/// Eigenpairs are sorted by ascending real part.
pub fn decompose(matrix: &Mat<Complex64>) -> Result<BiorthogonalDecomposition> {
    let n = matrix.nrows();
    assert_eq!(n, matrix.ncols());
    let eig = Eigen::new(matrix.as_ref()).map_err(|_| Error::EigenFailure)?;

    let mut order: Vec<usize> = (0..n).collect();
    let raw: Vec<Complex64> = eig.S().column_vector().iter().copied().collect();
    order.sort_by(|&a, &b| {
        (raw[a].re, raw[a].im)
            .partial_cmp(&(raw[b].re, raw[b].im))
            .unwrap()
    });

    let eigenvalues: Vec<Complex64> = order.iter().map(|&k| raw[k]).collect();
    let right = Mat::from_fn(n, n, |i, j| eig.U()[(i, order[j])]);
    let lu = right.partial_piv_lu();
    let left_rows = lu.solve(Mat::<Complex64>::identity(n, n));

    let residual = inversion_residual(&right, &left_rows);
    Ok(BiorthogonalDecomposition {
        eigenvalues,
        right,
        left_rows,
        residual,
    })
}

fn inversion_residual(v: &Mat<Complex64>, vinv: &Mat<Complex64>) -> f64 {
    let n = v.nrows();
    if n <= 1024 {
        let a = (v * vinv - Mat::<Complex64>::identity(n, n)).norm_max();
        let b = (vinv * v - Mat::<Complex64>::identity(n, n)).norm_max();
        a.max(b)
    } else {
        // Sampled columns keep the check affordable for big sectors.
        let mut worst: f64 = 0.0;
        for k in (0..n).step_by((n / 64).max(1)) {
            let col = vinv.as_ref().col(k);
            for i in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..n {
                    acc += v[(i, j)] * col[j];
                }
                let target = if i == k { 1.0 } else { 0.0 };
                worst = worst.max((acc - target).norm());
            }
        }
        worst
    }
}

/// Phase and log-magnitude of `det A` by LU with partial pivoting.
/// Returns `(log|det|, arg det)`; `Err(TrackCollision)` when a pivot
/// underflows (the matrix is numerically singular).
pub(crate) fn lu_logdet(mut a: Vec<Complex64>, n: usize, phi: f64) -> Result<(f64, f64)> {
    let mut log_abs = 0.0f64;
    let mut arg = 0.0f64;
    let mut sign = 1.0f64;
    let mut scale: f64 = 0.0;
    for x in &a {
        scale = scale.max(x.norm());
    }
    let tiny = scale.max(1e-300) * 1e-14;
    for k in 0..n {
        let mut p = k;
        let mut best = a[k * n + k].norm();
        for r in (k + 1)..n {
            let v = a[r * n + k].norm();
            if v > best {
                best = v;
                p = r;
            }
        }
        if best < tiny {
            return Err(Error::TrackCollision { phi, det_abs: best });
        }
        if p != k {
            for c in 0..n {
                a.swap(k * n + c, p * n + c);
            }
            sign = -sign;
        }
        let pivot = a[k * n + k];
        log_abs += pivot.norm().ln();
        arg += pivot.arg();
        for r in (k + 1)..n {
            let f = a[r * n + k] / pivot;
            if f.norm() == 0.0 {
                continue;
            }
            for c in (k + 1)..n {
                let v = a[k * n + c];
                a[r * n + c] -= f * v;
            }
        }
    }
    if sign < 0.0 {
        arg += std::f64::consts::PI;
    }
    Ok((log_abs, arg))
}

/// Wrap an angle difference into (-pi, pi].
pub(crate) fn wrap_angle(d: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut d = d % two_pi;
    if d > std::f64::consts::PI {
        d -= two_pi;
    } else if d <= -std::f64::consts::PI {
        d += two_pi;
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decompose_diagonal_matrix() {
        let m = Mat::from_fn(3, 3, |i, j| {
            if i == j {
                Complex64::new([3.0, 1.0, 2.0][i], [0.0, 0.5, -0.5][i])
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let d = decompose(&m).unwrap();
        assert!((d.eigenvalues[0] - Complex64::new(1.0, 0.5)).norm() < 1e-12);
        assert!((d.eigenvalues[1] - Complex64::new(2.0, -0.5)).norm() < 1e-12);
        assert!((d.eigenvalues[2] - Complex64::new(3.0, 0.0)).norm() < 1e-12);
        assert!(d.residual < 1e-12);
    }

    #[test]
    fn lu_logdet_against_direct_product() {
        // Upper-triangular with known determinant.
        let n = 4;
        let mut a = vec![Complex64::new(0.0, 0.0); n * n];
        let diag = [
            Complex64::new(2.0, 1.0),
            Complex64::new(-1.0, 0.5),
            Complex64::new(0.3, -2.0),
            Complex64::new(1.5, 1.5),
        ];
        for i in 0..n {
            a[i * n + i] = diag[i];
            for j in (i + 1)..n {
                a[i * n + j] = Complex64::new(0.7, -0.2);
            }
        }
        let det: Complex64 = diag.iter().product();
        let (log_abs, arg) = lu_logdet(a, n, 0.0).unwrap();
        assert!((log_abs - det.norm().ln()).abs() < 1e-12);
        assert!(wrap_angle(arg - det.arg()).abs() < 1e-12);
    }

    #[test]
    fn reality_of_conjugate_pair() {
        let m = Mat::from_fn(2, 2, |i, j| {
            if i == j {
                Complex64::new(0.7, if i == 0 { 0.3 } else { -0.3 })
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let d = decompose(&m).unwrap();
        let pr = partition_reality_check(&d, 37.0);
        assert!(pr.imag_ratio < 1e-12);
        // Z_shifted = 2 cos(beta b) at shift a.
        assert!((pr.z_shifted.re - 2.0 * (37.0f64 * 0.3).cos()).abs() < 1e-9);
    }
}
