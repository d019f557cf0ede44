//! Fock bases for N bosons in M modes, states over them, and the lifting of
//! single-particle mode unitaries to the many-body space.

use crate::error::{Error, Result};
use crate::linalg::{expi_hermitian, hermitian_deviation, unitarity_deviation, C64};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use std::collections::HashMap;
use std::sync::Arc;

/// Default cap on basis size; large enough for N=80 atoms on the ring
/// (dimension 3321) with headroom, small enough that dense matrices stay
/// well under a gigabyte.
pub const DEFAULT_CAPACITY: usize = 4096;

/// Per-mode atom counts at fixed total N.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OccupationVector(Vec<u32>);

impl OccupationVector {
    pub fn new(counts: Vec<u32>) -> Self {
        OccupationVector(counts)
    }

    pub fn counts(&self) -> &[u32] {
        &self.0
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn count(&self, mode: usize) -> u32 {
        self.0[mode]
    }
}

impl std::fmt::Display for OccupationVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|n| n.to_string()).collect();
        write!(f, "|{}>", parts.join(","))
    }
}

/// Enumerated N-atom, M-mode occupation basis with an index map.
///
/// Ordering is lexicographic descending on the occupation vectors, so the
/// first element is |N,0,...,0> and the last is |0,...,0,N>. The ordering is
/// frozen; stored results depend on it.
#[derive(Debug)]
pub struct FockBasis {
    n: u32,
    modes: usize,
    states: Vec<OccupationVector>,
    index: HashMap<Vec<u32>, usize>,
}

pub(crate) fn binomial_u128(n: u64, k: u64) -> u128 {
    let k = k.min(n - k.min(n));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

impl FockBasis {
    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn dimension(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[OccupationVector] {
        &self.states
    }

    pub fn occupation(&self, index: usize) -> &OccupationVector {
        &self.states[index]
    }

    pub fn index_of(&self, occ: &[u32]) -> Option<usize> {
        self.index.get(occ).copied()
    }

    /// True when two bases describe the same (N, M) space. Separately
    /// enumerated bases with equal parameters are interchangeable because the
    /// ordering is deterministic.
    pub fn compatible(&self, other: &FockBasis) -> bool {
        self.n == other.n && self.modes == other.modes
    }
}

/// Enumerate the N-atom, M-mode basis under the default capacity budget.
pub fn enumerate_basis(n: u32, modes: usize) -> Result<Arc<FockBasis>> {
    enumerate_basis_with_capacity(n, modes, DEFAULT_CAPACITY)
}

/// Enumerate with an explicit cap on the number of basis states.
pub fn enumerate_basis_with_capacity(
    n: u32,
    modes: usize,
    capacity: usize,
) -> Result<Arc<FockBasis>> {
    if modes == 0 {
        return Err(Error::InvalidParameter {
            name: "modes",
            value: 0.0,
        });
    }
    let dim = binomial_u128(n as u64 + modes as u64 - 1, modes as u64 - 1);
    if dim > capacity as u128 {
        return Err(Error::CapacityExceeded {
            dim,
            budget: capacity,
        });
    }
    let mut states = Vec::with_capacity(dim as usize);
    let mut current = vec![0u32; modes];
    fill_descending(&mut states, &mut current, 0, n, modes);
    let index = states
        .iter()
        .enumerate()
        .map(|(i, s)| (s.0.clone(), i))
        .collect();
    Ok(Arc::new(FockBasis {
        n,
        modes,
        states,
        index,
    }))
}

fn fill_descending(
    out: &mut Vec<OccupationVector>,
    current: &mut Vec<u32>,
    mode: usize,
    remaining: u32,
    modes: usize,
) {
    if mode == modes - 1 {
        current[mode] = remaining;
        out.push(OccupationVector(current.clone()));
        return;
    }
    for k in (0..=remaining).rev() {
        current[mode] = k;
        fill_descending(out, current, mode + 1, remaining - k, modes);
    }
}

/// Complex amplitudes over a Fock basis.
///
/// `norm_drift` accumulates the renormalization corrections applied after
/// lifted mode unitaries; it stays zero unless drift ever exceeds 1e-12.
#[derive(Debug, Clone)]
pub struct StateVector {
    basis: Arc<FockBasis>,
    amp: Array1<C64>,
    norm_drift: f64,
}

impl StateVector {
    pub fn from_amplitudes(basis: Arc<FockBasis>, amp: Array1<C64>) -> Result<Self> {
        if amp.len() != basis.dimension() {
            return Err(Error::BasisMismatch);
        }
        Ok(StateVector {
            basis,
            amp,
            norm_drift: 0.0,
        })
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn amplitudes(&self) -> ArrayView1<'_, C64> {
        self.amp.view()
    }

    pub fn amplitude(&self, occ: &[u32]) -> Option<C64> {
        self.basis.index_of(occ).map(|i| self.amp[i])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amp.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm_drift(&self) -> f64 {
        self.norm_drift
    }

    pub fn overlap(&self, other: &StateVector) -> Result<C64> {
        if !self.basis.compatible(&other.basis) {
            return Err(Error::BasisMismatch);
        }
        Ok(self
            .amp
            .iter()
            .zip(other.amp.iter())
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// |<self|other>|^2.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        Ok(self.overlap(other)?.norm_sqr())
    }

    /// Born-rule probabilities per basis element.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amp.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn assert_normalized(&self, tol: f64) -> Result<()> {
        let dev = (self.norm_sqr() - 1.0).abs();
        if dev > tol {
            return Err(Error::NotNormalized { deviation: dev });
        }
        Ok(())
    }

    pub(crate) fn with_amplitudes(&self, amp: Array1<C64>) -> StateVector {
        StateVector {
            basis: self.basis.clone(),
            amp,
            norm_drift: self.norm_drift,
        }
    }

    pub(crate) fn renormalize_recording_drift(&mut self) {
        let norm = self.norm_sqr().sqrt();
        let drift = (norm - 1.0).abs();
        if drift > 1e-12 {
            self.norm_drift += drift;
            self.amp.mapv_inplace(|z| z / norm);
        }
    }
}

/// Unit amplitude on one occupation vector.
pub fn fock_state(basis: &Arc<FockBasis>, occ: &[u32]) -> Result<StateVector> {
    let idx = basis.index_of(occ).ok_or_else(|| Error::InvalidOccupation {
        occ: occ.to_vec(),
        n: basis.n(),
        m: basis.modes(),
    })?;
    let mut amp = Array1::<C64>::zeros(basis.dimension());
    amp[idx] = C64::new(1.0, 0.0);
    StateVector::from_amplitudes(basis.clone(), amp)
}

/// Multiply each amplitude by exp(i chi n_mode).
pub fn apply_mode_phase(state: &StateVector, mode: usize, chi: f64) -> Result<StateVector> {
    let basis = state.basis();
    if mode >= basis.modes() {
        return Err(Error::ModeOutOfRange {
            mode,
            modes: basis.modes(),
        });
    }
    let mut amp = state.amplitudes().to_owned();
    for (a, occ) in amp.iter_mut().zip(basis.states()) {
        *a *= C64::from_polar(1.0, chi * occ.count(mode) as f64);
    }
    Ok(state.with_amplitudes(amp))
}

/// Apply the many-body image of the mode substitution a_j -> sum_k U_jk a_k.
///
/// On single-particle amplitudes the substitution acts as U^H (creation
/// operators pick up the conjugated coefficients). The lift is decomposed
/// into two-mode rotations and mode phases; each rotation is applied as the
/// exponential of its two-mode hopping generator, blockwise over the
/// conserved pair-occupation sectors.
pub fn mode_transform(state: &StateVector, u: ArrayView2<C64>) -> Result<StateVector> {
    let modes = state.basis().modes();
    if u.nrows() != modes || u.ncols() != modes {
        return Err(Error::InvalidParameter {
            name: "mode_matrix_dim",
            value: u.nrows() as f64,
        });
    }
    let dev = unitarity_deviation(u);
    if dev > 1e-10 {
        return Err(Error::NotUnitary { deviation: dev });
    }
    let w = adjoint(u);
    lift_amplitude_action(state, w.view())
}

fn adjoint(m: ArrayView2<C64>) -> Array2<C64> {
    let (r, c) = (m.nrows(), m.ncols());
    Array2::from_shape_fn((c, r), |(i, j)| m[(j, i)].conj())
}

/// Lift the unitary `w` acting on single-particle amplitudes to the Fock
/// space and apply it. Internal building block shared by `mode_transform`
/// and the timed gates (whose single-particle action is exp(-i h t)).
pub(crate) fn lift_amplitude_action(state: &StateVector, w: ArrayView2<C64>) -> Result<StateVector> {
    let modes = state.basis().modes();
    // Givens QR: rotations on adjacent mode pairs reduce w to an upper
    // triangular, hence diagonal, unitary. w = G_1^H ... G_K^H T, so the
    // state application order is T first, then the adjoints in reverse.
    let mut work = w.to_owned();
    let mut rotations: Vec<(usize, Array2<C64>)> = Vec::new();
    for col in 0..modes {
        for row in ((col + 1)..modes).rev() {
            let x1 = work[(row - 1, col)];
            let x2 = work[(row, col)];
            let r = (x1.norm_sqr() + x2.norm_sqr()).sqrt();
            if x2.norm() < 1e-15 * r.max(1e-300) {
                continue;
            }
            // det = 1 by construction: g = [[x1*, x2*], [-x2, x1]] / r
            let g = Array2::from_shape_vec(
                (2, 2),
                vec![x1.conj() / r, x2.conj() / r, -x2 / r, x1 / r],
            )
            .expect("2x2");
            apply_two_mode_to_matrix(&mut work, row - 1, &g);
            rotations.push((row - 1, g));
        }
    }
    // The reduced matrix must now be diagonal up to rounding.
    let mut off: f64 = 0.0;
    for i in 0..modes {
        for j in 0..modes {
            if i != j {
                off = off.max(work[(i, j)].norm());
            }
        }
    }
    if off > 1e-9 {
        return Err(Error::NotUnitary { deviation: off });
    }

    // T acts first: per-mode phases d_j = exp(i delta_j).
    let mut out = state.clone();
    for j in 0..modes {
        let delta = work[(j, j)].arg();
        if delta != 0.0 {
            out = apply_mode_phase(&out, j, delta)?;
        }
    }
    // Then the rotation adjoints in reverse order.
    for (top, g) in rotations.iter().rev() {
        let gh = adjoint(g.view());
        out = lift_two_mode(&out, *top, gh.view())?;
    }
    out.renormalize_recording_drift();
    Ok(out)
}

fn apply_two_mode_to_matrix(m: &mut Array2<C64>, top: usize, g: &Array2<C64>) {
    let cols = m.ncols();
    for c in 0..cols {
        let a = m[(top, c)];
        let b = m[(top + 1, c)];
        m[(top, c)] = g[(0, 0)] * a + g[(0, 1)] * b;
        m[(top + 1, c)] = g[(1, 0)] * a + g[(1, 1)] * b;
    }
}

/// Hermitian generator h with exp(-i h) = g for g in SU(2).
fn su2_generator(g: ArrayView2<C64>) -> Result<Array2<C64>> {
    let det = g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(1, 0)];
    if (det - C64::new(1.0, 0.0)).norm() > 1e-9 {
        return Err(Error::NotUnitary {
            deviation: (det - C64::new(1.0, 0.0)).norm(),
        });
    }
    // g = cos(t) I + i sin(t) (n . sigma)
    let cos_t = 0.5 * (g[(0, 0)] + g[(1, 1)]).re;
    let sx = g[(0, 1)].im;
    let sy = g[(0, 1)].re;
    let sz = g[(0, 0)].im;
    let r = (sx * sx + sy * sy + sz * sz).sqrt();
    let t = r.atan2(cos_t);
    let (nx, ny, nz) = if r < 1e-14 {
        (0.0, 0.0, 1.0)
    } else {
        (sx / r, sy / r, sz / r)
    };
    // exp(-i h) = exp(i t n.sigma) requires h = -t n.sigma
    let h = Array2::from_shape_vec(
        (2, 2),
        vec![
            C64::new(-t * nz, 0.0),
            C64::new(-t * nx, t * ny),
            C64::new(-t * nx, -t * ny),
            C64::new(t * nz, 0.0),
        ],
    )
    .expect("2x2");
    Ok(h)
}

/// Apply a two-mode unitary g on modes (top, top+1), lifted to the many-body
/// space as exp(-i H) with H = sum h_pq a_p^+ a_q. The pair occupation
/// K = n_top + n_{top+1} and all spectator occupations are conserved, so the
/// action is block diagonal; blocks depend only on K and are cached.
fn lift_two_mode(state: &StateVector, top: usize, g: ArrayView2<C64>) -> Result<StateVector> {
    let basis = state.basis().clone();
    let h2 = su2_generator(g)?;

    // Group basis indices by spectator occupations; within each group order
    // by descending n_top so position p corresponds to (n_top, n_bot) =
    // (K - p, p).
    let mut groups: HashMap<Vec<u32>, Vec<usize>> = HashMap::new();
    for (idx, occ) in basis.states().iter().enumerate() {
        let mut key = occ.counts().to_vec();
        key[top] = 0;
        key[top + 1] = 0;
        groups.entry(key).or_default().push(idx);
    }

    let mut blocks: HashMap<u32, Array2<C64>> = HashMap::new();
    let mut amp = state.amplitudes().to_owned();
    for (_, mut indices) in groups {
        indices.sort_by_key(|&i| std::cmp::Reverse(basis.occupation(i).count(top)));
        let k = basis.occupation(indices[0]).count(top) + basis.occupation(indices[0]).count(top + 1);
        debug_assert_eq!(indices.len() as u32, k + 1);
        let block = blocks
            .entry(k)
            .or_insert_with(|| two_mode_block(&h2, k).expect("small eigh"));
        let old: Vec<C64> = indices.iter().map(|&i| amp[i]).collect();
        for (p, &i) in indices.iter().enumerate() {
            let mut s = C64::new(0.0, 0.0);
            for (q, &o) in old.iter().enumerate() {
                s += block[(p, q)] * o;
            }
            amp[i] = s;
        }
    }
    Ok(state.with_amplitudes(amp))
}

/// exp(-i H_K) on the K-atom pair sector, positions p = (n_top = K - p).
fn two_mode_block(h2: &Array2<C64>, k: u32) -> Result<Array2<C64>> {
    let dim = (k + 1) as usize;
    let mut h = Array2::<C64>::zeros((dim, dim));
    for p in 0..dim {
        let n_top = (k as usize - p) as f64;
        let n_bot = p as f64;
        h[(p, p)] = h2[(0, 0)] * n_top + h2[(1, 1)] * n_bot;
        if p + 1 < dim {
            // <p+1| a_bot^+ a_top |p> = sqrt(n_top (n_bot + 1))
            let amp = (n_top * (n_bot + 1.0)).sqrt();
            h[(p + 1, p)] = h2[(1, 0)] * amp;
            h[(p, p + 1)] = h2[(0, 1)] * amp;
        }
    }
    debug_assert!(hermitian_deviation(h.view()) < 1e-12);
    expi_hermitian(h.view(), 1.0)
}

/// Hermitian operator on a Fock basis, optionally subnormalized (sector
/// blocks of a lossy mixture carry their probability as the trace).
#[derive(Debug, Clone)]
pub struct DensityOperator {
    basis: Arc<FockBasis>,
    matrix: Array2<C64>,
    weight: f64,
}

impl DensityOperator {
    pub fn new(basis: Arc<FockBasis>, matrix: Array2<C64>) -> Result<Self> {
        Self::subnormalized(basis, matrix, 1.0)
    }

    pub fn subnormalized(basis: Arc<FockBasis>, matrix: Array2<C64>, weight: f64) -> Result<Self> {
        if matrix.nrows() != basis.dimension() || matrix.ncols() != basis.dimension() {
            return Err(Error::BasisMismatch);
        }
        let scale = matrix.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        let dev = hermitian_deviation(matrix.view());
        if dev > 1e-12 * scale.max(1.0) {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let trace: f64 = (0..matrix.nrows()).map(|i| matrix[(i, i)].re).sum();
        if (trace - weight).abs() > 1e-9 * weight.max(1.0) {
            return Err(Error::TraceMismatch {
                trace,
                expected: weight,
            });
        }
        Ok(DensityOperator {
            basis,
            matrix,
            weight,
        })
    }

    pub fn from_pure(state: &StateVector) -> Self {
        let n = state.basis().dimension();
        let amp = state.amplitudes();
        let matrix = Array2::from_shape_fn((n, n), |(i, j)| amp[i] * amp[j].conj());
        DensityOperator {
            basis: state.basis().clone(),
            matrix,
            weight: state.norm_sqr(),
        }
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn matrix(&self) -> ArrayView2<'_, C64> {
        self.matrix.view()
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Check the eigenvalue floor: all eigenvalues >= -1e-12 (scaled).
    pub fn validate_positive(&self) -> Result<()> {
        let spec = crate::linalg::Spectrum::eigh(self.matrix.view())?;
        let max = spec.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
        let min = spec.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < -1e-12 * max.max(1.0) {
            return Err(Error::NotPositive {
                min_eigenvalue: min,
            });
        }
        Ok(())
    }
}
