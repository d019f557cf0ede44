//! Site- and flow-basis Hamiltonians on the three-site ring, exact unitary
//! evolution, and the timed gates (beam splitter, tritter, phase steps).

use crate::error::{Error, Result};
use crate::fock::{apply_mode_phase, lift_amplitude_action, FockBasis, StateVector};
use crate::linalg::{expi_hermitian, hermitian_deviation, Spectrum, C64};
use ndarray::{Array1, Array2, ArrayView1};
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

/// Ring couplings: link j connects sites j and (j+1) mod 3.
///
/// All rates are angular frequencies of H divided by hbar, quoted in Hz; with
/// this convention a hold of t = pi/(4 J) realizes a 50:50 splitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingParams {
    pub j: [f64; 3],
    pub v: [f64; 3],
    pub epsilon: [f64; 3],
}

impl RingParams {
    pub fn zero() -> Self {
        RingParams {
            j: [0.0; 3],
            v: [0.0; 3],
            epsilon: [0.0; 3],
        }
    }

    pub fn uniform_coupling(j: f64) -> Self {
        RingParams {
            j: [j; 3],
            ..RingParams::zero()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, vals) in [
            ("j", &self.j),
            ("v", &self.v),
            ("epsilon", &self.epsilon),
        ] {
            for &x in vals.iter() {
                if !x.is_finite() {
                    return Err(Error::InvalidParameter { name, value: x });
                }
            }
        }
        Ok(())
    }
}

enum Repr {
    Dense {
        matrix: Array2<C64>,
        spectrum: OnceLock<Spectrum>,
    },
    Diagonal(Array1<f64>),
}

impl std::fmt::Debug for Repr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Repr::Dense { matrix, .. } => write!(f, "Dense({}x{})", matrix.nrows(), matrix.ncols()),
            Repr::Diagonal(d) => write!(f, "Diagonal({})", d.len()),
        }
    }
}

/// Number-conserving Hamiltonian (H / hbar, angular frequency units) over a
/// Fock basis. Dense matrices carry a lazily computed eigendecomposition so
/// repeated evolutions reuse one factorization.
#[derive(Debug)]
pub struct HamiltonianMatrix {
    basis: Arc<FockBasis>,
    repr: Repr,
}

impl HamiltonianMatrix {
    fn dense(basis: Arc<FockBasis>, matrix: Array2<C64>) -> Result<Self> {
        let scale = matrix.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        let dev = hermitian_deviation(matrix.view());
        if dev > 1e-12 * scale.max(1.0) {
            return Err(Error::NotHermitian { deviation: dev });
        }
        Ok(HamiltonianMatrix {
            basis,
            repr: Repr::Dense {
                matrix,
                spectrum: OnceLock::new(),
            },
        })
    }

    fn diagonal(basis: Arc<FockBasis>, diag: Array1<f64>) -> Self {
        HamiltonianMatrix {
            basis,
            repr: Repr::Diagonal(diag),
        }
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dimension()
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self.repr, Repr::Diagonal(_))
    }

    pub fn diagonal_entries(&self) -> Option<ArrayView1<'_, f64>> {
        match &self.repr {
            Repr::Diagonal(d) => Some(d.view()),
            Repr::Dense { .. } => None,
        }
    }

    /// Materialize the matrix (diagonal representations included).
    pub fn to_matrix(&self) -> Array2<C64> {
        match &self.repr {
            Repr::Dense { matrix, .. } => matrix.clone(),
            Repr::Diagonal(d) => {
                let mut m = Array2::<C64>::zeros((d.len(), d.len()));
                for (i, &x) in d.iter().enumerate() {
                    m[(i, i)] = C64::new(x, 0.0);
                }
                m
            }
        }
    }

    fn spectrum(&self) -> Result<&Spectrum> {
        match &self.repr {
            Repr::Diagonal(_) => unreachable!("diagonal evolution bypasses the spectrum"),
            Repr::Dense { matrix, spectrum } => {
                if spectrum.get().is_none() {
                    let s = Spectrum::eigh(matrix.view())?;
                    let _ = spectrum.set(s);
                }
                Ok(spectrum.get().expect("just set"))
            }
        }
    }

    /// <state| H |state>, real by Hermiticity.
    pub fn expectation(&self, state: &StateVector) -> Result<f64> {
        if !state.basis().compatible(&self.basis) {
            return Err(Error::BasisMismatch);
        }
        let amp = state.amplitudes();
        match &self.repr {
            Repr::Diagonal(d) => Ok(amp
                .iter()
                .zip(d.iter())
                .map(|(a, &e)| a.norm_sqr() * e)
                .sum()),
            Repr::Dense { matrix, .. } => {
                let h_amp = matrix.dot(&amp);
                Ok(amp
                    .iter()
                    .zip(h_amp.iter())
                    .map(|(a, b)| (a.conj() * b).re)
                    .sum::<f64>())
            }
        }
    }
}

/// H / hbar = sum_j eps_j n_j - sum_j J_j (a_j^+ a_{j+1} + h.c.)
///          + sum_j V_j n_j (n_j - 1).
pub fn build_bose_hubbard(basis: &Arc<FockBasis>, params: &RingParams) -> Result<HamiltonianMatrix> {
    build_ring_hamiltonian(basis, params, 0.0)
}

/// Bose-Hubbard with the rotation entering as a phase exp(i theta/3) on each
/// hop a_j^+ a_{j+1}. Its single-particle spectrum reproduces the flow-mode
/// energies -2J cos(theta/3 - 2 pi k / 3), which is how the rotation hold is
/// simulated in the site basis when interactions must be included.
pub fn build_bose_hubbard_rotating(
    basis: &Arc<FockBasis>,
    params: &RingParams,
    theta: f64,
) -> Result<HamiltonianMatrix> {
    build_ring_hamiltonian(basis, params, theta)
}

fn build_ring_hamiltonian(
    basis: &Arc<FockBasis>,
    params: &RingParams,
    theta: f64,
) -> Result<HamiltonianMatrix> {
    if basis.modes() != 3 {
        return Err(Error::UnsupportedGeometry {
            modes: basis.modes(),
        });
    }
    params.validate()?;
    if params.j == [0.0; 3] {
        // interaction or offset holds are diagonal; skip the dense machinery
        let diag = Array1::from_vec(
            basis
                .states()
                .iter()
                .map(|occ| {
                    let n = occ.counts();
                    (0..3)
                        .map(|s| {
                            let ns = n[s] as f64;
                            params.epsilon[s] * ns + params.v[s] * ns * (ns - 1.0)
                        })
                        .sum()
                })
                .collect(),
        );
        return Ok(HamiltonianMatrix::diagonal(basis.clone(), diag));
    }
    let dim = basis.dimension();
    let mut h = Array2::<C64>::zeros((dim, dim));
    let hop_phase = C64::from_polar(1.0, theta / 3.0);
    for (idx, occ) in basis.states().iter().enumerate() {
        let n = occ.counts();
        let mut diag = 0.0;
        for ((&ns, &eps), &v) in n.iter().zip(&params.epsilon).zip(&params.v) {
            let ns = ns as f64;
            diag += eps * ns + v * ns * (ns - 1.0);
        }
        h[(idx, idx)] = C64::new(diag, 0.0);
        for link in 0..3 {
            let (a, b) = (link, (link + 1) % 3);
            if params.j[link] == 0.0 || n[b] == 0 {
                continue;
            }
            // -J e^{i theta/3} a_a^+ a_b moves one atom from b to a
            let mut target = n.to_vec();
            target[b] -= 1;
            target[a] += 1;
            let t_idx = basis.index_of(&target).expect("number conserving");
            let amp = ((n[b] as f64) * (n[a] as f64 + 1.0)).sqrt();
            let elem = -params.j[link] * amp * hop_phase;
            h[(t_idx, idx)] += elem;
            h[(idx, t_idx)] += elem.conj();
        }
    }
    HamiltonianMatrix::dense(basis.clone(), h)
}

/// Diagonal flow-basis Hamiltonian in the mode ordering (alpha_{-1}, alpha_0,
/// alpha_{+1}): H / hbar = -2J sum_k cos(theta/3 - 2 pi k / 3) n_k.
pub fn build_flow_hamiltonian(basis: &Arc<FockBasis>, j: f64, theta: f64) -> Result<HamiltonianMatrix> {
    if basis.modes() != 3 {
        return Err(Error::UnsupportedGeometry {
            modes: basis.modes(),
        });
    }
    let energies: Vec<f64> = [-1.0f64, 0.0, 1.0]
        .iter()
        .map(|k| -2.0 * j * (theta / 3.0 - 2.0 * PI * k / 3.0).cos())
        .collect();
    let diag = Array1::from_vec(
        basis
            .states()
            .iter()
            .map(|occ| {
                occ.counts()
                    .iter()
                    .zip(energies.iter())
                    .map(|(&n, &e)| n as f64 * e)
                    .sum()
            })
            .collect(),
    );
    Ok(HamiltonianMatrix::diagonal(basis.clone(), diag))
}

/// e^{-i H t} |state>. Dense Hamiltonians evolve through their cached
/// eigendecomposition; diagonal ones by direct phase multiplication.
pub fn evolve(state: &StateVector, h: &HamiltonianMatrix, t: f64) -> Result<StateVector> {
    if !state.basis().compatible(h.basis()) {
        return Err(Error::BasisMismatch);
    }
    if t.is_nan() || t < 0.0 {
        return Err(Error::InvalidParameter {
            name: "time",
            value: t,
        });
    }
    match &h.repr {
        Repr::Diagonal(d) => {
            let mut amp = state.amplitudes().to_owned();
            for (a, &e) in amp.iter_mut().zip(d.iter()) {
                *a *= C64::from_polar(1.0, -e * t);
            }
            Ok(state.with_amplitudes(amp))
        }
        Repr::Dense { .. } => {
            let spec = h.spectrum()?;
            let amp = spec.evolve(state.amplitudes(), t);
            Ok(state.with_amplitudes(amp))
        }
    }
}

/// Unitary DFT from site modes (a_0, a_1, a_2) to flow modes
/// (alpha_{-1}, alpha_0, alpha_{+1}): a_j = sum_k U_jk alpha_k with
/// U_jk = exp(-i 2 pi j k / 3) / sqrt(3).
pub fn site_to_flow_matrix() -> Array2<C64> {
    let mut u = Array2::<C64>::zeros((3, 3));
    for j in 0..3 {
        for (col, k) in [-1.0f64, 0.0, 1.0].iter().enumerate() {
            u[(j, col)] = C64::from_polar(1.0 / 3f64.sqrt(), -2.0 * PI * (j as f64) * k / 3.0);
        }
    }
    u
}

/// Inverse of `site_to_flow_matrix`.
pub fn flow_to_site_matrix() -> Array2<C64> {
    let u = site_to_flow_matrix();
    Array2::from_shape_fn((3, 3), |(i, j)| u[(j, i)].conj())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateKind {
    BeamSplitter,
    InverseBeamSplitter,
    Tritter,
    InverseTritter,
    PhaseStepPlus,
    PhaseStepMinus,
}

/// A gate as a timed evolution: kind, participating modes, coupling (J for
/// splitters and tritters, epsilon_2 for phase steps) and the hold time.
///
/// Canonical holds: pi/4J (BS), 3pi/4J (inverse BS), 2pi/9J (tritter),
/// 4pi/9J (inverse tritter), 4pi/3eps (phase +2pi/3), 2pi/3eps (phase
/// -2pi/3). Constructors fill these in; `apply_gate` rejects mismatches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateSpec {
    pub kind: GateKind,
    /// Two-port gates act on this mode pair; tritters use all modes and
    /// phase steps only `link.1`.
    pub link: (usize, usize),
    /// J or epsilon_2 in Hz (angular frequency of H / hbar).
    pub rate_hz: f64,
    pub hold_s: f64,
}

impl GateSpec {
    fn timed(kind: GateKind, link: (usize, usize), rate_hz: f64) -> Result<Self> {
        if rate_hz.is_nan() || rate_hz <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "rate_hz",
                value: rate_hz,
            });
        }
        let hold_s = canonical_hold(kind, rate_hz);
        Ok(GateSpec {
            kind,
            link,
            rate_hz,
            hold_s,
        })
    }

    /// 50:50 splitter on sites (p, q): a_p^+ -> (a_p^+ + i a_q^+)/sqrt(2).
    pub fn beam_splitter(j_hz: f64, link: (usize, usize)) -> Result<Self> {
        Self::timed(GateKind::BeamSplitter, link, j_hz)
    }

    pub fn inverse_beam_splitter(j_hz: f64, link: (usize, usize)) -> Result<Self> {
        Self::timed(GateKind::InverseBeamSplitter, link, j_hz)
    }

    pub fn tritter(j_hz: f64) -> Result<Self> {
        Self::timed(GateKind::Tritter, (0, 1), j_hz)
    }

    pub fn inverse_tritter(j_hz: f64) -> Result<Self> {
        Self::timed(GateKind::InverseTritter, (0, 1), j_hz)
    }

    /// Phase e^{+i 2pi/3 n_2} on site 2 via an offset hold.
    pub fn phase_step_plus(eps2_hz: f64) -> Result<Self> {
        Self::timed(GateKind::PhaseStepPlus, (2, 2), eps2_hz)
    }

    /// Phase e^{-i 2pi/3 n_2} on site 2 via an offset hold.
    pub fn phase_step_minus(eps2_hz: f64) -> Result<Self> {
        Self::timed(GateKind::PhaseStepMinus, (2, 2), eps2_hz)
    }
}

fn canonical_hold(kind: GateKind, rate_hz: f64) -> f64 {
    match kind {
        GateKind::BeamSplitter => PI / (4.0 * rate_hz),
        GateKind::InverseBeamSplitter => 3.0 * PI / (4.0 * rate_hz),
        GateKind::Tritter => 2.0 * PI / (9.0 * rate_hz),
        GateKind::InverseTritter => 4.0 * PI / (9.0 * rate_hz),
        GateKind::PhaseStepPlus => 4.0 * PI / (3.0 * rate_hz),
        GateKind::PhaseStepMinus => 2.0 * PI / (3.0 * rate_hz),
    }
}

fn kind_name(kind: GateKind) -> &'static str {
    match kind {
        GateKind::BeamSplitter => "beam splitter",
        GateKind::InverseBeamSplitter => "inverse beam splitter",
        GateKind::Tritter => "tritter",
        GateKind::InverseTritter => "inverse tritter",
        GateKind::PhaseStepPlus => "phase step +2pi/3",
        GateKind::PhaseStepMinus => "phase step -2pi/3",
    }
}

/// Apply a gate to a site-basis state.
///
/// Splitters and tritters evolve under the pure hopping Hamiltonian with
/// non-participating links held at zero; since that Hamiltonian is the lift
/// of a single-particle matrix h, the evolution is applied as the lift of
/// exp(-i h t), which is exact and avoids a many-body diagonalization.
///
/// Phase steps multiply amplitudes by e^{i chi n_2}. The +2pi/3 step uses
/// the offset hold t = 4pi/(3 eps2), valid because e^{-i(4pi/3)n} equals
/// e^{+i(2pi/3)n} for integer n; the -2pi/3 step holds for t = 2pi/(3 eps2).
pub fn apply_gate(state: &StateVector, gate: &GateSpec) -> Result<StateVector> {
    let modes = state.basis().modes();
    if modes != 3 {
        return Err(Error::UnsupportedGeometry { modes });
    }
    let expected = canonical_hold(gate.kind, gate.rate_hz);
    if (gate.hold_s - expected).abs() > 1e-9 * expected {
        return Err(Error::GateHoldMismatch {
            kind: kind_name(gate.kind),
            got: gate.hold_s,
            expected,
        });
    }
    match gate.kind {
        GateKind::PhaseStepPlus => {
            // e^{-i eps t n} with eps t = 4pi/3, i.e. chi = +2pi/3 mod 2pi
            apply_mode_phase(state, gate.link.1, 2.0 * PI / 3.0)
        }
        GateKind::PhaseStepMinus => apply_mode_phase(state, gate.link.1, -2.0 * PI / 3.0),
        GateKind::BeamSplitter | GateKind::InverseBeamSplitter => {
            let (p, q) = gate.link;
            if p >= modes || q >= modes || p == q {
                return Err(Error::ModeOutOfRange { mode: p.max(q), modes });
            }
            let mut h1 = Array2::<C64>::zeros((modes, modes));
            h1[(p, q)] = C64::new(-gate.rate_hz, 0.0);
            h1[(q, p)] = C64::new(-gate.rate_hz, 0.0);
            let w = expi_hermitian(h1.view(), gate.hold_s)?;
            lift_amplitude_action(state, w.view())
        }
        GateKind::Tritter | GateKind::InverseTritter => {
            let mut h1 = Array2::<C64>::zeros((modes, modes));
            for link in 0..3 {
                let (a, b) = (link, (link + 1) % 3);
                h1[(a, b)] = C64::new(-gate.rate_hz, 0.0);
                h1[(b, a)] = C64::new(-gate.rate_hz, 0.0);
            }
            let w = expi_hermitian(h1.view(), gate.hold_s)?;
            lift_amplitude_action(state, w.view())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{enumerate_basis, fock_state, mode_transform};
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;

    #[test]
    fn diagonal_terms_match_hand_values() {
        let b = enumerate_basis(1, 3).unwrap();
        let params = RingParams {
            epsilon: [0.0, 0.0, 0.7],
            ..RingParams::zero()
        };
        let h = build_bose_hubbard(&b, &params).unwrap();
        let m = h.to_matrix();
        let idx = b.index_of(&[0, 0, 1]).unwrap();
        assert_abs_diff_eq!(m[(idx, idx)].re, 0.7, epsilon = 1e-15);

        let b2 = enumerate_basis(2, 3).unwrap();
        let params_v = RingParams {
            v: [0.0, 0.3, 0.0],
            ..RingParams::zero()
        };
        let h2 = build_bose_hubbard(&b2, &params_v).unwrap();
        let m2 = h2.to_matrix();
        let idx2 = b2.index_of(&[0, 2, 0]).unwrap();
        // a^+2 a^2 = n(n-1) gives 2 V for two atoms
        assert_abs_diff_eq!(m2[(idx2, idx2)].re, 0.6, epsilon = 1e-15);
    }

    #[test]
    fn one_particle_uniform_ring_spectrum() {
        let b = enumerate_basis(1, 3).unwrap();
        let j = 1.3;
        let h = build_bose_hubbard(&b, &RingParams::uniform_coupling(j)).unwrap();
        let spec = Spectrum::eigh(h.to_matrix().view()).unwrap();
        let mut eigs: Vec<f64> = spec.eigenvalues.to_vec();
        eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_abs_diff_eq!(eigs[0], -2.0 * j, epsilon = 1e-12);
        assert_abs_diff_eq!(eigs[1], j, epsilon = 1e-12);
        assert_abs_diff_eq!(eigs[2], j, epsilon = 1e-12);
    }

    #[test]
    fn beam_splitter_on_single_atom() {
        let b = enumerate_basis(1, 3).unwrap();
        let s = fock_state(&b, &[1, 0, 0]).unwrap();
        let gate = GateSpec::beam_splitter(2.0, (0, 1)).unwrap();
        let out = apply_gate(&s, &gate).unwrap();
        let a0 = out.amplitude(&[1, 0, 0]).unwrap();
        let a1 = out.amplitude(&[0, 1, 0]).unwrap();
        let r = 1.0 / 2f64.sqrt();
        assert!((a0 - Complex64::new(r, 0.0)).norm() < 1e-12);
        assert!((a1 - Complex64::new(0.0, r)).norm() < 1e-12);
    }

    #[test]
    fn beam_splitter_matches_dense_evolution() {
        let b = enumerate_basis(3, 3).unwrap();
        let s = fock_state(&b, &[3, 0, 0]).unwrap();
        let j = 1.7;
        let gate = GateSpec::beam_splitter(j, (0, 1)).unwrap();
        let fast = apply_gate(&s, &gate).unwrap();
        let params = RingParams {
            j: [j, 0.0, 0.0],
            ..RingParams::zero()
        };
        let h = build_bose_hubbard(&b, &params).unwrap();
        let slow = evolve(&s, &h, gate.hold_s).unwrap();
        for (a, bb) in fast.amplitudes().iter().zip(slow.amplitudes().iter()) {
            assert!((a - bb).norm() < 1e-12);
        }
    }

    #[test]
    fn splitter_full_period_revives_up_to_phase() {
        let b = enumerate_basis(1, 3).unwrap();
        let s = fock_state(&b, &[1, 0, 0]).unwrap();
        let j = 2.0;
        let mid = apply_gate(&s, &GateSpec::beam_splitter(j, (0, 1)).unwrap()).unwrap();
        let back = apply_gate(&mid, &GateSpec::inverse_beam_splitter(j, (0, 1)).unwrap()).unwrap();
        let overlap = s.overlap(&back).unwrap();
        assert_abs_diff_eq!(overlap.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn tritter_single_particle_column() {
        let b = enumerate_basis(1, 3).unwrap();
        let s = fock_state(&b, &[1, 0, 0]).unwrap();
        let out = apply_gate(&s, &GateSpec::tritter(1.0).unwrap()).unwrap();
        let a0 = out.amplitude(&[1, 0, 0]).unwrap();
        let a1 = out.amplitude(&[0, 1, 0]).unwrap();
        let a2 = out.amplitude(&[0, 0, 1]).unwrap();
        let r = 1.0 / 3f64.sqrt();
        assert_abs_diff_eq!(a0.norm(), r, epsilon = 1e-12);
        // ratios relative to the first entry kill the global phase
        let w = Complex64::from_polar(1.0, 2.0 * PI / 3.0);
        assert!((a1 / a0 - w).norm() < 1e-12);
        assert!((a2 / a0 - w).norm() < 1e-12);
    }

    #[test]
    fn phase_steps_compose_to_identity() {
        let b = enumerate_basis(4, 3).unwrap();
        let s = fock_state(&b, &[1, 1, 2]).unwrap();
        let plus = apply_gate(&s, &GateSpec::phase_step_plus(5.0).unwrap()).unwrap();
        let back = apply_gate(&plus, &GateSpec::phase_step_minus(5.0).unwrap()).unwrap();
        for (a, bb) in back.amplitudes().iter().zip(s.amplitudes().iter()) {
            assert!((a - bb).norm() < 1e-12);
        }
    }

    #[test]
    fn phase_step_equals_offset_hold() {
        let b = enumerate_basis(2, 3).unwrap();
        let s0 = fock_state(&b, &[1, 0, 1]).unwrap();
        let s1 = fock_state(&b, &[0, 0, 2]).unwrap();
        let sum = {
            let mut amp = s0.amplitudes().to_owned();
            amp += &s1.amplitudes();
            amp.mapv_inplace(|z| z / 2f64.sqrt());
            s0.with_amplitudes(amp)
        };
        let eps = 3.0;
        let gate = GateSpec::phase_step_plus(eps).unwrap();
        let fast = apply_gate(&sum, &gate).unwrap();
        let params = RingParams {
            epsilon: [0.0, 0.0, eps],
            ..RingParams::zero()
        };
        let h = build_bose_hubbard(&b, &params).unwrap();
        let slow = evolve(&sum, &h, gate.hold_s).unwrap();
        for (a, bb) in fast.amplitudes().iter().zip(slow.amplitudes().iter()) {
            assert!((a - bb).norm() < 1e-12);
        }
    }

    #[test]
    fn gate_hold_mismatch_is_rejected() {
        let b = enumerate_basis(1, 3).unwrap();
        let s = fock_state(&b, &[1, 0, 0]).unwrap();
        let mut gate = GateSpec::beam_splitter(2.0, (0, 1)).unwrap();
        gate.hold_s *= 1.5;
        assert!(matches!(
            apply_gate(&s, &gate),
            Err(Error::GateHoldMismatch { .. })
        ));
    }

    #[test]
    fn flow_hamiltonian_energies() {
        let b = enumerate_basis(1, 3).unwrap();
        let j = 10.0;
        let h = build_flow_hamiltonian(&b, j, 0.0).unwrap();
        let d = h.diagonal_entries().unwrap();
        // ordering (alpha_{-1}, alpha_0, alpha_{+1}); basis order puts the
        // single atom in mode 0 first
        let em1 = d[b.index_of(&[1, 0, 0]).unwrap()];
        let e0 = d[b.index_of(&[0, 1, 0]).unwrap()];
        let ep1 = d[b.index_of(&[0, 0, 1]).unwrap()];
        assert_abs_diff_eq!(em1, j, epsilon = 1e-12);
        assert_abs_diff_eq!(e0, -2.0 * j, epsilon = 1e-12);
        assert_abs_diff_eq!(ep1, j, epsilon = 1e-12);
        assert_abs_diff_eq!(em1, ep1, epsilon = 1e-15);
    }

    #[test]
    fn rotating_hamiltonian_matches_flow_energies() {
        let b = enumerate_basis(1, 3).unwrap();
        let j = 10.0;
        let theta = PI / 100.0;
        let h = build_bose_hubbard_rotating(&b, &RingParams::uniform_coupling(j), theta).unwrap();
        let spec = Spectrum::eigh(h.to_matrix().view()).unwrap();
        let mut site: Vec<f64> = spec.eigenvalues.to_vec();
        site.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let flow = build_flow_hamiltonian(&b, j, theta).unwrap();
        let mut fl: Vec<f64> = flow.diagonal_entries().unwrap().to_vec();
        fl.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, bb) in site.iter().zip(fl.iter()) {
            assert_abs_diff_eq!(a, bb, epsilon = 1e-10);
        }
    }

    #[test]
    fn flow_site_consistency_through_transform() {
        // evolving under the uniform ring in the site basis then moving to
        // flow modes equals moving first and evolving diagonally
        let b = enumerate_basis(3, 3).unwrap();
        let s = fock_state(&b, &[2, 1, 0]).unwrap();
        let j = 1.1;
        let t = 0.37;
        let h_site = build_bose_hubbard(&b, &RingParams::uniform_coupling(j)).unwrap();
        let path_a = {
            let evolved = evolve(&s, &h_site, t).unwrap();
            mode_transform(&evolved, site_to_flow_matrix().view()).unwrap()
        };
        let h_flow = build_flow_hamiltonian(&b, j, 0.0).unwrap();
        let path_b = {
            let moved = mode_transform(&s, site_to_flow_matrix().view()).unwrap();
            evolve(&moved, &h_flow, t).unwrap()
        };
        for (x, y) in path_a.amplitudes().iter().zip(path_b.amplitudes().iter()) {
            assert!((x - y).norm() < 1e-10);
        }
    }

    #[test]
    fn evolve_zero_time_is_identity() {
        let b = enumerate_basis(2, 3).unwrap();
        let s = fock_state(&b, &[1, 1, 0]).unwrap();
        let h = build_bose_hubbard(&b, &RingParams::uniform_coupling(1.0)).unwrap();
        let out = evolve(&s, &h, 0.0).unwrap();
        for (a, bb) in out.amplitudes().iter().zip(s.amplitudes().iter()) {
            assert!((a - bb).norm() < 1e-12);
        }
    }

    #[test]
    fn energy_is_conserved_under_evolution() {
        let b = enumerate_basis(4, 3).unwrap();
        let s = fock_state(&b, &[2, 1, 1]).unwrap();
        let params = RingParams {
            j: [1.0, 0.8, 1.2],
            v: [0.1, 0.2, 0.05],
            epsilon: [0.0, 0.3, 0.1],
        };
        let h = build_bose_hubbard(&b, &params).unwrap();
        let e0 = h.expectation(&s).unwrap();
        let out = evolve(&s, &h, 2.5).unwrap();
        let e1 = h.expectation(&out).unwrap();
        assert_abs_diff_eq!(e0, e1, epsilon = 1e-10);
    }
}
