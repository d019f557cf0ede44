//! The three measurement pipelines: uncorrelated input (scheme 1), bat-state
//! input (scheme 2), and NOON-state input via a quantum beam splitter
//! (scheme 3), plus rotation application, phase read-out, and detection
//! statistics.

use crate::constants::{MASS_RB87, PLANCK_H};
use crate::dynamics::{
    apply_gate, build_bose_hubbard, build_flow_hamiltonian, evolve, flow_to_site_matrix,
    site_to_flow_matrix, GateSpec, RingParams,
};
use crate::error::{Error, Result};
use crate::fock::{
    apply_mode_phase, enumerate_basis, fock_state, FockBasis, OccupationVector, StateVector,
};
use crate::linalg::C64;
use ndarray::Array1;
use std::f64::consts::PI;
use std::sync::Arc;

/// Ring circumference used throughout: 2 pi times a 20 micrometre radius.
pub const DEFAULT_RING_LENGTH_M: f64 = 2.0 * PI * 20e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QbsVariant {
    /// NOON construction on the {|N,0,0>, |0,N,0>} span with xi = 0 by fiat.
    Ideal,
    /// Beam splitter, pi/2 phase, interaction hold t = pi/2V with V_0 = 2V_1,
    /// beam splitter.
    Physical,
}

/// Parameters for one pipeline run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig {
    pub scheme: u8,
    pub n: u32,
    /// Tunneling rate during gates and the rotation hold.
    pub j_hz: f64,
    /// Interaction strength for the physical quantum beam splitter and the
    /// optional detection hold.
    pub v_hz: f64,
    pub theta_rad: f64,
    pub t_omega_s: f64,
    pub ring_length_m: f64,
    pub atom_mass_kg: f64,
    pub qbs: QbsVariant,
    /// Scheme-2 post-step: evolve with barriers high for tau = pi/16V before
    /// measuring.
    pub detection_hold: bool,
    /// Record labeled intermediate states.
    pub snapshots: bool,
}

impl SchemeConfig {
    pub fn new(scheme: u8, n: u32) -> Self {
        SchemeConfig {
            scheme,
            n,
            j_hz: 10.0,
            v_hz: 1.0,
            theta_rad: PI / 100.0,
            t_omega_s: 1.0,
            ring_length_m: DEFAULT_RING_LENGTH_M,
            atom_mass_kg: MASS_RB87,
            qbs: QbsVariant::Ideal,
            detection_hold: false,
            snapshots: false,
        }
    }

    /// Set theta from a rotation rate via omega = h theta / (L^2 m).
    pub fn with_omega(mut self, omega_rad_s: f64) -> Result<Self> {
        self.theta_rad = theta_from_omega(omega_rad_s, self.ring_length_m, self.atom_mass_kg)?;
        Ok(self)
    }

    pub fn omega_rad_s(&self) -> Result<f64> {
        omega_from_theta(self.theta_rad, self.ring_length_m, self.atom_mass_kg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.scheme) {
            return Err(Error::InvalidParameter {
                name: "scheme",
                value: self.scheme as f64,
            });
        }
        if self.n == 0 {
            return Err(Error::InvalidParameter {
                name: "n",
                value: 0.0,
            });
        }
        if self.scheme == 2 && !self.n.is_multiple_of(2) {
            return Err(Error::OddAtomNumber { n: self.n });
        }
        if self.j_hz <= 0.0 || !self.j_hz.is_finite() {
            return Err(Error::InvalidParameter {
                name: "j_hz",
                value: self.j_hz,
            });
        }
        if self.v_hz < 0.0 || !self.v_hz.is_finite() {
            return Err(Error::InvalidParameter {
                name: "v_hz",
                value: self.v_hz,
            });
        }
        if !self.theta_rad.is_finite() {
            return Err(Error::InvalidParameter {
                name: "theta_rad",
                value: self.theta_rad,
            });
        }
        if self.t_omega_s < 0.0 || !self.t_omega_s.is_finite() {
            return Err(Error::InvalidParameter {
                name: "t_omega_s",
                value: self.t_omega_s,
            });
        }
        if self.ring_length_m.is_nan() || self.ring_length_m <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "ring_length_m",
                value: self.ring_length_m,
            });
        }
        if self.atom_mass_kg.is_nan() || self.atom_mass_kg <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "atom_mass_kg",
                value: self.atom_mass_kg,
            });
        }
        if self.scheme == 3 && self.qbs == QbsVariant::Physical && self.v_hz == 0.0 {
            return Err(Error::MissingInteraction);
        }
        if self.detection_hold {
            if self.scheme != 2 {
                return Err(Error::InvalidParameter {
                    name: "detection_hold",
                    value: self.scheme as f64,
                });
            }
            if self.v_hz == 0.0 {
                return Err(Error::MissingInteraction);
            }
        }
        Ok(())
    }
}

/// Born-rule probabilities per occupation outcome.
#[derive(Debug, Clone)]
pub struct DetectionDistribution {
    basis: Arc<FockBasis>,
    probabilities: Vec<f64>,
}

impl DetectionDistribution {
    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn probability(&self, occ: &[u32]) -> f64 {
        self.basis
            .index_of(occ)
            .map(|i| self.probabilities[i])
            .unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    /// Expected atom count at one site.
    pub fn mean_site_occupation(&self, site: usize) -> Result<f64> {
        if site >= self.basis.modes() {
            return Err(Error::ModeOutOfRange {
                mode: site,
                modes: self.basis.modes(),
            });
        }
        Ok(self
            .probabilities
            .iter()
            .zip(self.basis.states())
            .map(|(&p, occ)| p * occ.count(site) as f64)
            .sum())
    }

    /// Outcomes with probability above `tol`, highest first.
    pub fn support(&self, tol: f64) -> Vec<(&OccupationVector, f64)> {
        let mut out: Vec<(&OccupationVector, f64)> = self
            .probabilities
            .iter()
            .zip(self.basis.states())
            .filter(|(&p, _)| p > tol)
            .map(|(&p, occ)| (occ, p))
            .collect();
        out.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
        out
    }
}

/// Project a site-basis state onto number measurement outcomes.
pub fn detection_distribution(state: &StateVector) -> DetectionDistribution {
    DetectionDistribution {
        basis: state.basis().clone(),
        probabilities: state.probabilities(),
    }
}

/// Output of one pipeline run.
#[derive(Debug, Clone)]
pub struct SchemeResult {
    pub final_state: StateVector,
    /// Rotation phase extracted from the flow-state evolution itself.
    pub phi_rad: f64,
    pub distribution: DetectionDistribution,
    pub snapshots: Option<Vec<(&'static str, StateVector)>>,
}

/// Output of the quantum beam splitter.
#[derive(Debug, Clone)]
pub struct QBSResult {
    pub output: StateVector,
    /// Relative phase between the |0,N,0> and |N,0,0> components.
    pub xi_rad: f64,
    /// Overlap with the closest state of the form
    /// (|N,0,0> + e^{i xi}|0,N,0>)/sqrt(2).
    pub noon_fidelity: f64,
}

/// phi = 2 sqrt(3) J t_omega sin(theta / 3).
pub fn rotation_phase(j_hz: f64, t_omega_s: f64, theta_rad: f64) -> f64 {
    2.0 * 3f64.sqrt() * j_hz * t_omega_s * (theta_rad / 3.0).sin()
}

/// omega = h theta / (L^2 m).
pub fn omega_from_theta(theta_rad: f64, ring_length_m: f64, atom_mass_kg: f64) -> Result<f64> {
    check_geometry(ring_length_m, atom_mass_kg)?;
    Ok(PLANCK_H * theta_rad / (ring_length_m * ring_length_m * atom_mass_kg))
}

/// theta = omega L^2 m / h.
pub fn theta_from_omega(omega_rad_s: f64, ring_length_m: f64, atom_mass_kg: f64) -> Result<f64> {
    check_geometry(ring_length_m, atom_mass_kg)?;
    Ok(omega_rad_s * ring_length_m * ring_length_m * atom_mass_kg / PLANCK_H)
}

fn check_geometry(ring_length_m: f64, atom_mass_kg: f64) -> Result<()> {
    if ring_length_m.is_nan() || ring_length_m <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "ring_length_m",
            value: ring_length_m,
        });
    }
    if atom_mass_kg.is_nan() || atom_mass_kg <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "atom_mass_kg",
            value: atom_mass_kg,
        });
    }
    Ok(())
}

/// Evolve a flow-basis state through the rotation hold.
pub fn apply_rotation(
    state: &StateVector,
    j_hz: f64,
    theta_rad: f64,
    t_omega_s: f64,
) -> Result<StateVector> {
    let h = build_flow_hamiltonian(state.basis(), j_hz, theta_rad)?;
    evolve(state, &h, t_omega_s)
}

/// Evolve through the rotation hold while measuring the accumulated
/// inter-flow phase from the state itself.
///
/// The hold is split into substeps short enough that the phase advance
/// between any two occupied |N-m, 0, m> ladder states stays below pi, so
/// complex-argument differences never alias. The per-pair advances are
/// pooled by weighted least squares into a single phase-per-unit-m slope,
/// which is the phi the schemes measure. Fitting the state rather than
/// evaluating the closed form keeps the read-out honest when perturbations
/// (interactions, residual couplings) distort the evolution.
pub fn apply_rotation_tracked(
    state: &StateVector,
    j_hz: f64,
    theta_rad: f64,
    t_omega_s: f64,
) -> Result<(StateVector, f64)> {
    let basis = state.basis().clone();
    let n = basis.n();
    let h = build_flow_hamiltonian(&basis, j_hz, theta_rad)?;
    let phi_pred = rotation_phase(j_hz, t_omega_s, theta_rad);
    let steps = ((n as f64 * phi_pred.abs() / (PI / 2.0)).ceil() as usize).max(1);
    let dt = t_omega_s / steps as f64;

    // ladder of |N-m, 0, m> states carrying the inter-flow phase
    let ladder: Vec<(usize, u32)> = (0..=n)
        .filter_map(|m| basis.index_of(&[n - m, 0, m]).map(|i| (i, m)))
        .collect();
    let weights: Vec<f64> = ladder
        .iter()
        .map(|&(idx, _)| state.amplitudes()[idx].norm_sqr())
        .collect();
    let w_max = weights.iter().cloned().fold(0.0f64, f64::max);
    let occupied: Vec<usize> = (0..ladder.len())
        .filter(|&s| weights[s] > 1e-14 * w_max.max(1e-300))
        .collect();

    let mut pair_advance = vec![0.0f64; occupied.len().saturating_sub(1)];
    let mut current = state.clone();
    for _ in 0..steps {
        let next = evolve(&current, &h, dt)?;
        for (slot, pair) in occupied.windows(2).enumerate() {
            let (i_lo, _) = ladder[pair[0]];
            let (i_hi, _) = ladder[pair[1]];
            let r_lo = next.amplitudes()[i_lo] * current.amplitudes()[i_lo].conj();
            let r_hi = next.amplitudes()[i_hi] * current.amplitudes()[i_hi].conj();
            pair_advance[slot] += (r_hi * r_lo.conj()).arg();
        }
        current = next;
    }

    // weighted least squares through the origin: advance = phi * gap
    let mut num = 0.0;
    let mut den = 0.0;
    for (slot, pair) in occupied.windows(2).enumerate() {
        let gap = (ladder[pair[1]].1 - ladder[pair[0]].1) as f64;
        let w = weights[pair[0]].min(weights[pair[1]]);
        num += w * gap * pair_advance[slot];
        den += w * gap * gap;
    }
    let phi = if den > 0.0 { num / den } else { 0.0 };
    Ok((current, phi))
}

fn hadamard_on_extremes(state: &StateVector) -> Result<StateVector> {
    let basis = state.basis();
    let n = basis.n();
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "n",
            value: 0.0,
        });
    }
    let i0 = basis
        .index_of(&[n, 0, 0])
        .ok_or(Error::UnsupportedGeometry {
            modes: basis.modes(),
        })?;
    let i1 = basis
        .index_of(&[0, n, 0])
        .ok_or(Error::UnsupportedGeometry {
            modes: basis.modes(),
        })?;
    let mut amp = state.amplitudes().to_owned();
    let (a, b) = (amp[i0], amp[i1]);
    let r = 1.0 / 2f64.sqrt();
    amp[i0] = (a + b) * r;
    amp[i1] = (a - b) * r;
    Ok(state.with_amplitudes(amp))
}

fn noon_metrics(state: &StateVector) -> (f64, f64) {
    let n = state.basis().n();
    let a = state.amplitude(&[n, 0, 0]).unwrap_or(C64::new(0.0, 0.0));
    let b = state.amplitude(&[0, n, 0]).unwrap_or(C64::new(0.0, 0.0));
    let fidelity = ((a.norm() + b.norm()).powi(2) / 2.0).min(1.0);
    let xi = if a.norm() > 1e-12 && b.norm() > 1e-12 {
        (b / a).arg()
    } else {
        0.0
    };
    (xi, fidelity)
}

fn qbs_hold(basis: &Arc<FockBasis>, v_hz: f64) -> Result<(crate::dynamics::HamiltonianMatrix, f64)> {
    let params = RingParams {
        v: [2.0 * v_hz, v_hz, 0.0],
        ..RingParams::zero()
    };
    Ok((build_bose_hubbard(basis, &params)?, PI / (2.0 * v_hz)))
}

/// Split |N,0,0> into a NOON superposition across sites 0 and 1.
pub fn quantum_beam_splitter(
    state: &StateVector,
    variant: QbsVariant,
    j_hz: f64,
    v_hz: f64,
) -> Result<QBSResult> {
    let output = match variant {
        QbsVariant::Ideal => hadamard_on_extremes(state)?,
        QbsVariant::Physical => {
            if v_hz.is_nan() || v_hz <= 0.0 {
                return Err(Error::MissingInteraction);
            }
            let bs = GateSpec::beam_splitter(j_hz, (0, 1))?;
            let s = apply_gate(state, &bs)?;
            let s = apply_mode_phase(&s, 1, PI / 2.0)?;
            let (h, hold) = qbs_hold(state.basis(), v_hz)?;
            let s = evolve(&s, &h, hold)?;
            apply_gate(&s, &bs)?
        }
    };
    let (xi_rad, noon_fidelity) = noon_metrics(&output);
    Ok(QBSResult {
        output,
        xi_rad,
        noon_fidelity,
    })
}

/// Undo the quantum beam splitter: inverse splitter, interaction hold, -pi/2
/// phase, inverse splitter. The hold is its own inverse because its phases
/// pi n(n-1)/2-per-site come in even multiples of pi when doubled.
pub fn inverse_quantum_beam_splitter(
    state: &StateVector,
    variant: QbsVariant,
    j_hz: f64,
    v_hz: f64,
) -> Result<StateVector> {
    match variant {
        QbsVariant::Ideal => hadamard_on_extremes(state),
        QbsVariant::Physical => {
            if v_hz.is_nan() || v_hz <= 0.0 {
                return Err(Error::MissingInteraction);
            }
            let inv_bs = GateSpec::inverse_beam_splitter(j_hz, (0, 1))?;
            let s = apply_gate(state, &inv_bs)?;
            let (h, hold) = qbs_hold(state.basis(), v_hz)?;
            let s = evolve(&s, &h, hold)?;
            let s = apply_mode_phase(&s, 1, -PI / 2.0)?;
            apply_gate(&s, &inv_bs)
        }
    }
}

/// Uncorrelated input |N,0,0>.
pub fn run_scheme1(config: &SchemeConfig) -> Result<SchemeResult> {
    expect_scheme(config, 1)?;
    let basis = enumerate_basis(config.n, 3)?;
    let init = fock_state(&basis, &[config.n, 0, 0])?;
    splitter_pipeline(config, init)
}

/// Twin-Fock input |N/2, N/2, 0> (bat state after the first splitter).
pub fn run_scheme2(config: &SchemeConfig) -> Result<SchemeResult> {
    expect_scheme(config, 2)?;
    let basis = enumerate_basis(config.n, 3)?;
    let init = fock_state(&basis, &[config.n / 2, config.n / 2, 0])?;
    splitter_pipeline(config, init)
}

/// NOON input via the quantum beam splitter.
pub fn run_scheme3(config: &SchemeConfig) -> Result<SchemeResult> {
    expect_scheme(config, 3)?;
    let basis = enumerate_basis(config.n, 3)?;
    let init = fock_state(&basis, &[config.n, 0, 0])?;
    let j = config.j_hz;
    let mut snaps: Option<Vec<(&'static str, StateVector)>> = config.snapshots.then(Vec::new);

    let qbs = quantum_beam_splitter(&init, config.qbs, j, config.v_hz)?;
    let mut s = qbs.output;
    snap(&mut snaps, "after_qbs", &s);
    s = apply_gate(&s, &GateSpec::tritter(j)?)?;
    s = apply_gate(&s, &GateSpec::phase_step_plus(j)?)?;
    let flow = crate::fock::mode_transform(&s, site_to_flow_matrix().view())?;
    snap(&mut snaps, "flow_before_rotation", &flow);
    let (flow_rot, phi) =
        apply_rotation_tracked(&flow, j, config.theta_rad, config.t_omega_s)?;
    snap(&mut snaps, "flow_after_rotation", &flow_rot);
    s = crate::fock::mode_transform(&flow_rot, flow_to_site_matrix().view())?;
    s = apply_gate(&s, &GateSpec::phase_step_minus(j)?)?;
    s = apply_gate(&s, &GateSpec::inverse_tritter(j)?)?;
    s = inverse_quantum_beam_splitter(&s, config.qbs, j, config.v_hz)?;
    snap(&mut snaps, "after_inverse_qbs", &s);

    let distribution = detection_distribution(&s);
    Ok(SchemeResult {
        final_state: s,
        phi_rad: phi,
        distribution,
        snapshots: snaps,
    })
}

/// Dispatch on `config.scheme`.
pub fn run_scheme(config: &SchemeConfig) -> Result<SchemeResult> {
    match config.scheme {
        1 => run_scheme1(config),
        2 => run_scheme2(config),
        3 => run_scheme3(config),
        other => Err(Error::InvalidParameter {
            name: "scheme",
            value: other as f64,
        }),
    }
}

fn expect_scheme(config: &SchemeConfig, scheme: u8) -> Result<()> {
    if config.scheme != scheme {
        return Err(Error::InvalidParameter {
            name: "scheme",
            value: config.scheme as f64,
        });
    }
    config.validate()
}

fn snap(snaps: &mut Option<Vec<(&'static str, StateVector)>>, label: &'static str, s: &StateVector) {
    if let Some(v) = snaps.as_mut() {
        v.push((label, s.clone()));
    }
}

fn splitter_pipeline(config: &SchemeConfig, init: StateVector) -> Result<SchemeResult> {
    let j = config.j_hz;
    let mut snaps: Option<Vec<(&'static str, StateVector)>> = config.snapshots.then(Vec::new);

    let mut s = apply_gate(&init, &GateSpec::beam_splitter(j, (0, 1))?)?;
    snap(&mut snaps, "after_beam_splitter", &s);
    s = apply_gate(&s, &GateSpec::tritter(j)?)?;
    s = apply_gate(&s, &GateSpec::phase_step_plus(j)?)?;
    snap(&mut snaps, "after_phase_step", &s);
    let flow = crate::fock::mode_transform(&s, site_to_flow_matrix().view())?;
    snap(&mut snaps, "flow_before_rotation", &flow);
    let (flow_rot, phi) =
        apply_rotation_tracked(&flow, j, config.theta_rad, config.t_omega_s)?;
    snap(&mut snaps, "flow_after_rotation", &flow_rot);
    s = crate::fock::mode_transform(&flow_rot, flow_to_site_matrix().view())?;
    s = apply_gate(&s, &GateSpec::phase_step_minus(j)?)?;
    s = apply_gate(&s, &GateSpec::inverse_tritter(j)?)?;
    s = apply_gate(&s, &GateSpec::inverse_beam_splitter(j, (0, 1))?)?;
    snap(&mut snaps, "after_undo", &s);

    if config.detection_hold {
        let params = RingParams {
            v: [config.v_hz; 3],
            ..RingParams::zero()
        };
        let h = build_bose_hubbard(init.basis(), &params)?;
        s = evolve(&s, &h, PI / (16.0 * config.v_hz))?;
        snap(&mut snaps, "after_detection_hold", &s);
    }

    let distribution = detection_distribution(&s);
    Ok(SchemeResult {
        final_state: s,
        phi_rad: phi,
        distribution,
        snapshots: snaps,
    })
}

/// Amplitudes of the |N-m, 0, m> ladder (flow ordering), used to compare
/// pipeline states against coefficient families.
pub fn flow_ladder_amplitudes(state: &StateVector) -> Array1<C64> {
    let basis = state.basis();
    let n = basis.n();
    Array1::from_vec(
        (0..=n)
            .map(|m| {
                basis
                    .index_of(&[n - m, 0, m])
                    .map(|i| state.amplitudes()[i])
                    .unwrap_or(C64::new(0.0, 0.0))
            })
            .collect(),
    )
}
