//! Biorthogonal free-fermion solver for the jz = 0 chain: ground states,
//! correlation matrices, and second Renyi entropies.

use faer::Mat;
use num_complex::Complex64;

use super::{decompose, BiorthogonalDecomposition};
use crate::error::{Error, Result};
use crate::model::{fermion_boundary, single_particle_matrix, Boundary, ChainParams};

/// Half-filled biorthogonal ground state of the free-fermion picture.
#[derive(Debug, Clone)]
pub struct FreeFermionGroundState {
    /// Sum of the occupied mode energies plus the `mu N / 2` offset, in
    /// spin-chain units.
    pub energy: Complex64,
    /// Indices (into the sorted decomposition) of the occupied modes.
    pub occupied: Vec<usize>,
    pub decomposition: BiorthogonalDecomposition,
    pub fermion_bc: Boundary,
}

/// Occupy the `N/2` single-particle modes with the lowest real parts.
/// A real-part tie at the filling edge is reported instead of silently
/// broken; perturb `mu` (or the flux) to lift it.
pub fn ff_ground_state(params: &ChainParams, fermion_bc: Boundary) -> Result<FreeFermionGroundState> {
    let h = single_particle_matrix(params, fermion_bc)?;
    let decomposition = decompose(&h.to_faer())?;
    let n = params.n_sites;
    let fill = n / 2;
    let edge_gap = decomposition.eigenvalues[fill].re - decomposition.eigenvalues[fill - 1].re;
    if edge_gap.abs() < 1e-10 {
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for (k, e) in decomposition.eigenvalues.iter().enumerate() {
            if (e.re - decomposition.eigenvalues[fill - 1].re).abs() < 1e-10 {
                indices.push(k);
                values.push(e.re);
            }
        }
        return Err(Error::FillingDegeneracy { indices, values });
    }
    let occupied: Vec<usize> = (0..fill).collect();
    let energy = occupied
        .iter()
        .map(|&k| decomposition.eigenvalues[k])
        .sum::<Complex64>()
        + h.offset;
    Ok(FreeFermionGroundState {
        energy,
        occupied,
        decomposition,
        fermion_bc,
    })
}

/// Biorthogonal ground-state correlation matrix
/// `C_ij = <c^dag_i c_j> = sum_{n occ} conj(psi^L_n(i)) psi^R_n(j)`.
pub fn correlation_matrix(gs: &FreeFermionGroundState) -> Mat<Complex64> {
    let n = gs.decomposition.dim();
    let d = &gs.decomposition;
    Mat::from_fn(n, n, |i, j| {
        let mut acc = Complex64::new(0.0, 0.0);
        for &m in &gs.occupied {
            // conj(psi^L_m(i)) is exactly row m of V^{-1}.
            acc += d.left_rows[(m, i)] * d.right[(j, m)];
        }
        acc
    })
}

/// Second Renyi entropy of a region, under both the analytic-continuation
/// definition and the absolute-value definition.
#[derive(Debug, Clone)]
pub struct EntropyResult {
    /// `S^(2) = -sum_n ln[xi_n^2 + (1 - xi_n)^2]` (complex for complex xi).
    pub s2: Complex64,
    /// `-sum_n ln[|xi_n|^2 + (1 - |xi_n|)^2]` (always real).
    pub s2_abs: f64,
    pub region: Vec<usize>,
    /// Eigenvalues of the restricted correlation matrix.
    pub xi: Vec<Complex64>,
}

/// Central region between the (N/4)-th and (3N/4)-th site: 0-based indices
/// `N/4 .. 3N/4`, half the chain.
pub fn default_region(n_sites: usize) -> Vec<usize> {
    (n_sites / 4..3 * n_sites / 4).collect()
}

/// Renyi-2 entropy of `region` from a correlation matrix.
pub fn renyi2(c: &Mat<Complex64>, region: &[usize]) -> Result<EntropyResult> {
    let n = c.nrows();
    if region.is_empty() || region.len() >= n {
        return Err(Error::InvalidParams(
            "region must be a non-empty proper subset".into(),
        ));
    }
    let sub = Mat::from_fn(region.len(), region.len(), |a, b| {
        c[(region[a], region[b])]
    });
    let xi = sub.eigenvalues().map_err(|_| Error::EigenFailure)?;
    let mut s2 = Complex64::new(0.0, 0.0);
    let mut s2_abs = 0.0f64;
    for &x in &xi {
        let one = Complex64::new(1.0, 0.0);
        let t = x * x + (one - x) * (one - x);
        if t.norm() < 1e-14 {
            return Err(Error::EntropySingularity(t.norm()));
        }
        s2 -= t.ln();
        let xa = x.norm();
        s2_abs -= (xa * xa + (1.0 - xa) * (1.0 - xa)).ln();
    }
    Ok(EntropyResult {
        s2,
        s2_abs,
        region: region.to_vec(),
        xi,
    })
}

/// Renyi-2 difference between a ring and the open chain.
#[derive(Debug, Clone)]
pub struct EntropyDifference {
    pub ds: Complex64,
    pub ds_abs: f64,
    /// Fermion boundary used for the ring (mapped per the parity rule).
    pub ring_fermion_bc: Boundary,
    pub region: Vec<usize>,
}

/// `Delta S = S^(2)_ring - S^(2)_open` for both entropy definitions.
/// `params.boundary` selects the spin-chain ring type (periodic or
/// antiperiodic); the fermion boundary follows from half filling.
pub fn delta_s(params: &ChainParams, region: Option<&[usize]>) -> Result<EntropyDifference> {
    if params.boundary == Boundary::Open {
        return Err(Error::InvalidParams(
            "delta_s needs a ring boundary to compare against the open chain".into(),
        ));
    }
    let region = region
        .map(|r| r.to_vec())
        .unwrap_or_else(|| default_region(params.n_sites));

    let ring_bc = fermion_boundary(params.n_sites, params.n_sites / 2, params.boundary)?;
    let ring = ff_ground_state(params, ring_bc)?;
    let s_ring = renyi2(&correlation_matrix(&ring), &region)?;

    let open = ff_ground_state(params, Boundary::Open)?;
    let s_open = renyi2(&correlation_matrix(&open), &region)?;

    Ok(EntropyDifference {
        ds: s_ring.s2 - s_open.s2,
        ds_abs: s_ring.s2_abs - s_open.s2_abs,
        ring_fermion_bc: ring_bc,
        region,
    })
}
