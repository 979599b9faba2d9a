//! The non-Hermitian chain Hamiltonian, its bond-operator decomposition and
//! vertex weights, the sign-problem gate, and the spin-fermion mappings.
//!
//! The chain is
//!
//! ```text
//! H = sum_b  jz Sz_b Sz_{b+1}
//!          + (1/2) [1 - dj (-1)^b - delta] S+_b S-_{b+1}
//!          + (1/2) [1 - dj (-1)^b + delta] S-_b S+_{b+1}
//!          - mu sum_i Sz_i
//! ```
//!
//! with bonds labelled b = 1..N-1 (open) or b = 1..N with site N+1 = 1
//! (ring). `delta != 0` makes the two hopping directions unequal and the
//! Hamiltonian non-Hermitian; the model stays PT-symmetric, so its spectrum
//! is real or comes in conjugate pairs.

use num_complex::Complex64;
use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

/// Boundary condition of a chain (spin or fermion, depending on context).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Boundary {
    Open,
    Periodic,
    Antiperiodic,
}

impl Boundary {
    pub fn as_str(&self) -> &'static str {
        match self {
            Boundary::Open => "obc",
            Boundary::Periodic => "pbc",
            Boundary::Antiperiodic => "apbc",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "obc" | "open" => Ok(Boundary::Open),
            "pbc" | "periodic" => Ok(Boundary::Periodic),
            "apbc" | "antiperiodic" => Ok(Boundary::Antiperiodic),
            other => Err(Error::ConfigParse(format!("unknown boundary `{other}`"))),
        }
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Full physical + algorithmic parameter set of the chain.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ChainParams {
    /// Number of sites N; must be even so the off-diagonal sign factor drops.
    pub n_sites: usize,
    /// Ising coupling jz.
    pub jz: f64,
    /// Staggered XY modulation dj.
    pub dj: f64,
    /// Non-reciprocity delta; the source of non-Hermiticity.
    pub delta: f64,
    /// Constant shift eps added to the diagonal bond operator. Pure
    /// algorithmic knob: it tunes vertex weights (and loop bounce rates)
    /// without changing the physics.
    pub eps: f64,
    /// Uniform field mu (the Fermi energy of the fermion picture).
    pub mu: f64,
    /// Inverse temperature.
    pub beta: f64,
    pub boundary: Boundary,
}

impl ChainParams {
    pub fn new(
        n_sites: usize,
        jz: f64,
        dj: f64,
        delta: f64,
        eps: f64,
        mu: f64,
        beta: f64,
        boundary: Boundary,
    ) -> Result<Self> {
        let p = ChainParams {
            n_sites,
            jz,
            dj,
            delta,
            eps,
            mu,
            beta,
            boundary,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites < 2 || self.n_sites % 2 != 0 {
            return Err(Error::InvalidParams(format!(
                "n_sites must be even and >= 2, got {}",
                self.n_sites
            )));
        }
        if !(self.beta > 0.0) {
            return Err(Error::InvalidParams(format!(
                "beta must be > 0, got {}",
                self.beta
            )));
        }
        for (name, v) in [
            ("jz", self.jz),
            ("dj", self.dj),
            ("delta", self.delta),
            ("eps", self.eps),
            ("mu", self.mu),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParams(format!("{name} must be finite")));
            }
        }
        Ok(())
    }

    /// Number of bonds: N-1 open, N on a ring.
    pub fn n_bonds(&self) -> usize {
        match self.boundary {
            Boundary::Open => self.n_sites - 1,
            _ => self.n_sites,
        }
    }

    /// Constant shift per bond, C = eps + jz/4.
    pub fn bond_constant(&self) -> f64 {
        self.eps + self.jz / 4.0
    }

    /// Field share of site `i` (1-based) on one of its bonds: 1/2 in the
    /// bulk where each site sits on two bonds, 1 at an open edge.
    fn mu_share(&self, site: usize) -> f64 {
        match self.boundary {
            Boundary::Open if site == 1 || site == self.n_sites => 1.0,
            _ => 0.5,
        }
    }

    /// Sign-free gate for SSE sampling: `1 - |dj| - |delta| >= 0`,
    /// `eps >= max(0, -jz/2)`, and every field-shifted diagonal vertex
    /// weight non-negative.
    pub fn sign_free(&self) -> bool {
        if 1.0 - self.dj.abs() - self.delta.abs() < 0.0 {
            return false;
        }
        if self.eps < (-self.jz / 2.0).max(0.0) {
            return false;
        }
        // Antiperiodic spin chains would need a negative boundary bond;
        // SSE runs are restricted to open/periodic.
        if self.boundary == Boundary::Antiperiodic {
            return false;
        }
        (1..=self.n_bonds()).all(|b| self.diagonal_weights(b).iter().all(|&w| w >= 0.0))
    }

    /// The four diagonal vertex weights [w11, w12, w13, w14] of bond `b`
    /// (1-based), i.e. the matrix elements of
    /// `C - jz Sz Sz + mu (k_b Sz_b + k_{b+1} Sz_{b+1})`
    /// on (uu, dd, ud, du). The field term is absorbed bond-locally with
    /// the shares `k` from [`mu_share`].
    fn diagonal_weights(&self, b: usize) -> [f64; 4] {
        let (i, j) = self.bond_sites(b);
        let (ki, kj) = (self.mu_share(i), self.mu_share(j));
        let c = self.bond_constant();
        let w11 = c - self.jz / 4.0 + self.mu * (ki + kj) / 2.0;
        let w12 = c - self.jz / 4.0 - self.mu * (ki + kj) / 2.0;
        let w13 = c + self.jz / 4.0 + self.mu * (ki - kj) / 2.0;
        let w14 = c + self.jz / 4.0 - self.mu * (ki - kj) / 2.0;
        [w11, w12, w13, w14]
    }

    /// Sites (1-based) joined by bond `b` (1-based); the ring bond N joins
    /// sites (N, 1).
    pub fn bond_sites(&self, b: usize) -> (usize, usize) {
        debug_assert!(b >= 1 && b <= self.n_bonds());
        if b == self.n_sites {
            (self.n_sites, 1)
        } else {
            (b, b + 1)
        }
    }

    /// `(-1)^b` with bonds counted from 1, fixing which sublattice `dj`
    /// strengthens.
    pub fn bond_sign(b: usize) -> f64 {
        if b % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Off-diagonal weights (w2, w3) of bond `b`:
    /// w2 = [1 - dj(-1)^b - delta]/2 (moves an up spin left),
    /// w3 = [1 - dj(-1)^b + delta]/2 (moves an up spin right).
    pub fn offdiagonal_weights(&self, b: usize) -> (f64, f64) {
        let stag = 1.0 - self.dj * Self::bond_sign(b);
        (0.5 * (stag - self.delta), 0.5 * (stag + self.delta))
    }
}

/// Weights of the six nonzero vertices of one bond.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BondWeights {
    /// uu -> uu diagonal.
    pub w11: f64,
    /// dd -> dd diagonal.
    pub w12: f64,
    /// ud -> ud diagonal.
    pub w13: f64,
    /// du -> du diagonal.
    pub w14: f64,
    /// du -> ud exchange (up spin hops left).
    pub w2: f64,
    /// ud -> du exchange (up spin hops right).
    pub w3: f64,
}

impl BondWeights {
    pub fn max_weight(&self) -> f64 {
        self.w11
            .max(self.w12)
            .max(self.w13)
            .max(self.w14)
            .max(self.w2)
            .max(self.w3)
    }

    pub fn all(&self) -> [f64; 6] {
        [self.w11, self.w12, self.w13, self.w14, self.w2, self.w3]
    }
}

/// Vertex leg-state patterns, 4 bits per vertex:
/// bit 0 = lower-left, 1 = lower-right, 2 = upper-right, 3 = upper-left
/// (lower legs = in-state of sites (b, b+1), upper legs = out-state).
/// Exactly six patterns are spin-conserving vertices; everything else has
/// weight zero.
pub mod pattern {
    pub const UU: u8 = 0b1111; // w11
    pub const DD: u8 = 0b0000; // w12
    pub const UD: u8 = 0b1001; // w13
    pub const DU: u8 = 0b0110; // w14
    pub const HOP_LEFT: u8 = 0b1010; // w2: in du, out ud
    pub const HOP_RIGHT: u8 = 0b0101; // w3: in ud, out du
}

/// Table of vertex weights for every bond, indexed by the 4-bit leg
/// pattern. Built once per parameter set; immutable afterwards.
#[derive(Debug, Clone)]
pub struct VertexTable {
    n_bonds: usize,
    bonds: Vec<BondWeights>,
    /// Per bond, weight of each of the 16 leg patterns (zero for the ten
    /// non-vertices).
    by_pattern: Vec<[f64; 16]>,
}

impl VertexTable {
    /// Build the table; rejects parameter sets with a sign problem.
    pub fn build(params: &ChainParams) -> Result<Self> {
        if !params.sign_free() {
            return Err(Error::SignProblem(format!(
                "jz={}, dj={}, delta={}, eps={}, mu={}, boundary={}",
                params.jz, params.dj, params.delta, params.eps, params.mu, params.boundary
            )));
        }
        let n_bonds = params.n_bonds();
        let mut bonds = Vec::with_capacity(n_bonds);
        let mut by_pattern = Vec::with_capacity(n_bonds);
        for b in 1..=n_bonds {
            let [w11, w12, w13, w14] = params.diagonal_weights(b);
            let (w2, w3) = params.offdiagonal_weights(b);
            let bw = BondWeights {
                w11,
                w12,
                w13,
                w14,
                w2,
                w3,
            };
            let mut pat = [0.0; 16];
            pat[pattern::UU as usize] = w11;
            pat[pattern::DD as usize] = w12;
            pat[pattern::UD as usize] = w13;
            pat[pattern::DU as usize] = w14;
            pat[pattern::HOP_LEFT as usize] = w2;
            pat[pattern::HOP_RIGHT as usize] = w3;
            bonds.push(bw);
            by_pattern.push(pat);
        }
        Ok(VertexTable {
            n_bonds,
            bonds,
            by_pattern,
        })
    }

    pub fn n_bonds(&self) -> usize {
        self.n_bonds
    }

    /// Weights of bond `b` (1-based).
    pub fn bond(&self, b: usize) -> &BondWeights {
        &self.bonds[b - 1]
    }

    /// Weights of a bulk bond with `(-1)^b = -1` (odd b).
    pub fn odd(&self) -> &BondWeights {
        &self.bonds[0]
    }

    /// Weights of a bulk bond with `(-1)^b = +1` (even b).
    pub fn even(&self) -> &BondWeights {
        &self.bonds[1]
    }

    /// Weight of leg pattern `pat` on bond `b` (1-based).
    #[inline]
    pub fn weight(&self, b: usize, pat: u8) -> f64 {
        self.by_pattern[b - 1][pat as usize]
    }

    #[inline]
    pub(crate) fn patterns(&self, b: usize) -> &[f64; 16] {
        &self.by_pattern[b - 1]
    }
}

/// Dense single-particle Hamiltonian of the fermion picture (jz = 0).
#[derive(Debug, Clone)]
pub struct SingleParticleHam {
    pub dim: usize,
    /// Row-major N x N matrix; `matrix[i][j]` multiplies `f_i^dag f_j`.
    pub matrix: Vec<Vec<Complex64>>,
    /// Fermion boundary condition actually applied.
    pub boundary: Boundary,
    /// Scalar offset `mu N / 2` from normal-ordering the field term; add it
    /// to mode sums to recover spin-chain energies.
    pub offset: f64,
}

impl SingleParticleHam {
    pub fn to_faer(&self) -> faer::Mat<Complex64> {
        faer::Mat::from_fn(self.dim, self.dim, |i, j| self.matrix[i][j])
    }
}

/// Fermion boundary condition implied by a spin-chain boundary at fixed
/// fermion number. The ring bond maps as `S+_N S-_1 = -K f^dag_N f_1` with
/// `K = (-1)^{N_f}`, so spin rings at even filling become antiperiodic
/// fermion rings and vice versa.
pub fn fermion_boundary(
    n_sites: usize,
    n_fermions: usize,
    spin_boundary: Boundary,
) -> Result<Boundary> {
    if n_sites == 0 {
        return Err(Error::InvalidParams("n_sites must be positive".into()));
    }
    let base = match spin_boundary {
        Boundary::Open => return Ok(Boundary::Open),
        Boundary::Periodic => 0,
        Boundary::Antiperiodic => 1,
    };
    // Boundary hopping picks up -K = -(-1)^{N_f}; together with a possible
    // spin-level antiperiodic flip this is (-1)^{N_f + 1 + base}.
    if (n_fermions + 1 + base) % 2 == 0 {
        Ok(Boundary::Periodic)
    } else {
        Ok(Boundary::Antiperiodic)
    }
}

/// Single-particle matrix of the jz = 0 chain under an explicit fermion
/// boundary condition:
/// `h[b][b+1] = [1 - dj(-1)^b - delta]/2`, `h[b+1][b] = [1 - dj(-1)^b + delta]/2`,
/// `h[i][i] = -mu`, ring entries multiplied by -1 when antiperiodic.
pub fn single_particle_matrix(
    params: &ChainParams,
    fermion_bc: Boundary,
) -> Result<SingleParticleHam> {
    params.validate()?;
    if params.jz != 0.0 {
        return Err(Error::NotFreeFermion(params.jz));
    }
    let n = params.n_sites;
    let mut m = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for i in 0..n {
        m[i][i] = Complex64::new(-params.mu, 0.0);
    }
    let n_b = match fermion_bc {
        Boundary::Open => n - 1,
        _ => n,
    };
    for b in 1..=n_b {
        let (w2, w3) = params.offdiagonal_weights(b);
        let phase = if b == n && fermion_bc == Boundary::Antiperiodic {
            -1.0
        } else {
            1.0
        };
        let (i, j) = if b == n { (n - 1, 0) } else { (b - 1, b) };
        // S+_b S-_{b+1} = f^dag_b f_{b+1} carries w2; the reverse hop w3.
        m[i][j] += Complex64::new(phase * w2, 0.0);
        m[j][i] += Complex64::new(phase * w3, 0.0);
    }
    Ok(SingleParticleHam {
        dim: n,
        matrix: m,
        boundary: fermion_bc,
        offset: params.mu * n as f64 / 2.0,
    })
}

/// Single-particle Hamiltonian with the boundary phase inferred from the
/// spin boundary at half filling.
pub fn jordan_wigner_hamiltonian(params: &ChainParams) -> Result<SingleParticleHam> {
    let bc = fermion_boundary(params.n_sites, params.n_sites / 2, params.boundary)?;
    single_particle_matrix(params, bc)
}

// ---------------------------------------------------------------------------
// Flat key-value config round-trip.
// ---------------------------------------------------------------------------

/// Serialize parameters (plus a seed) as `key = value` lines. Floats use
/// the shortest representation that round-trips exactly.
pub fn params_to_kv(params: &ChainParams, seed: u64) -> String {
    let mut s = String::new();
    s.push_str(&format!("n_sites = {}\n", params.n_sites));
    s.push_str(&format!("jz = {}\n", params.jz));
    s.push_str(&format!("dj = {}\n", params.dj));
    s.push_str(&format!("delta = {}\n", params.delta));
    s.push_str(&format!("eps = {}\n", params.eps));
    s.push_str(&format!("mu = {}\n", params.mu));
    s.push_str(&format!("beta = {}\n", params.beta));
    s.push_str(&format!("boundary = {}\n", params.boundary));
    s.push_str(&format!("seed = {seed}\n"));
    s
}

/// Parse a flat key-value text into a raw map; later keys override earlier
/// ones. Lines starting with `#` and blank lines are skipped.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::ConfigParse(format!("line {}: expected `key = value`", lineno + 1))
        })?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

fn kv_get<'a>(map: &'a BTreeMap<String, String>, key: &str) -> Result<&'a str> {
    map.get(key)
        .map(|s| s.as_str())
        .ok_or_else(|| Error::ConfigParse(format!("missing key `{key}`")))
}

fn kv_parse<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<T> {
    kv_get(map, key)?
        .parse()
        .map_err(|_| Error::ConfigParse(format!("key `{key}`: cannot parse `{}`", map[key])))
}

/// Parse chain parameters (and the seed) from a flat key-value text.
pub fn params_from_kv(text: &str) -> Result<(ChainParams, u64)> {
    let map = parse_kv(text)?;
    let params = ChainParams::new(
        kv_parse(&map, "n_sites")?,
        kv_parse(&map, "jz")?,
        kv_parse(&map, "dj")?,
        kv_parse(&map, "delta")?,
        kv_parse(&map, "eps")?,
        kv_parse(&map, "mu")?,
        kv_parse(&map, "beta")?,
        Boundary::parse(kv_get(&map, "boundary")?)?,
    )?;
    let seed = kv_parse(&map, "seed")?;
    Ok((params, seed))
}
