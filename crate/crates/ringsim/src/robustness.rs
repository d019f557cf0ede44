//! Practicality analyses: lattice-parameter estimates for the coupling and
//! interaction rates, interaction-induced fidelity decay of the
//! pair-correlated pipeline versus atom number, the metastability bound on
//! site offsets, short-time rotation sensitivity, and the effect of
//! shot-to-shot atom-number fluctuations.

use crate::constants::{HBAR, MASS_RB87, PLANCK_H};
use crate::dynamics::{build_bose_hubbard, build_bose_hubbard_rotating, evolve, RingParams};
use crate::error::{Error, Result};
use crate::fock::{enumerate_basis, fock_state, StateVector};
use crate::linalg::C64;
use crate::metrology::{scheme_coefficients, SchemeFamily};
use crate::schemes::{run_scheme2, SchemeConfig};
use ndarray::Array1;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::f64::consts::PI;

/// Optical-lattice and atom parameters for the rate estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    /// s-wave scattering length, m.
    pub a_s_m: f64,
    /// Barrier (lattice) depth, J.
    pub v0_j: f64,
    /// Lattice recoil energy, J.
    pub e_r_j: f64,
    /// Lattice light wavelength, m.
    pub lambda_m: f64,
    /// Transverse site width, m.
    pub d_m: f64,
    /// Atom mass, kg.
    pub m_atom_kg: f64,
}

impl PhysicalParams {
    /// Rubidium-87 in a 10 um lattice with equal transverse width; barrier
    /// depth given in recoil units.
    pub fn rubidium(v0_over_recoil: f64, a_s_m: f64) -> Self {
        let lambda = 10e-6;
        let e_r = crate::constants::recoil_energy(lambda, MASS_RB87);
        PhysicalParams {
            a_s_m,
            v0_j: v0_over_recoil * e_r,
            e_r_j: e_r,
            lambda_m: lambda,
            d_m: lambda,
            m_atom_kg: MASS_RB87,
        }
    }

    pub fn validate(&self) -> Result<()> {
        // a_s = 0 is meaningful (interactions tuned away); the rest must be
        // strictly positive
        if self.a_s_m < 0.0 || !self.a_s_m.is_finite() {
            return Err(Error::InvalidParameter {
                name: "a_s_m",
                value: self.a_s_m,
            });
        }
        for (name, v) in [
            ("v0_j", self.v0_j),
            ("e_r_j", self.e_r_j),
            ("lambda_m", self.lambda_m),
            ("d_m", self.d_m),
            ("m_atom_kg", self.m_atom_kg),
        ] {
            if v <= 0.0 || !v.is_finite() {
                return Err(Error::InvalidParameter { name, value: v });
            }
        }
        Ok(())
    }
}

/// On-site interaction rate V ~ 2 a_s V0^{3/4} E_R^{1/4} / (hbar sqrt(lambda D)),
/// in the same frequency units as the Hamiltonian rates.
pub fn estimate_interaction(phys: &PhysicalParams) -> Result<f64> {
    phys.validate()?;
    Ok(2.0 * phys.a_s_m * phys.v0_j.powf(0.75) * phys.e_r_j.powf(0.25)
        / (HBAR * (phys.lambda_m * phys.d_m).sqrt()))
}

/// Tunnel coupling through a barrier of depth V0:
/// J ~ (E_R / 2 hbar) exp(-(pi^2/4) sqrt(V0/E_R)) sqrt(V0/E_R) (1 + V0/E_R).
pub fn estimate_coupling(v0_j: f64, e_r_j: f64) -> Result<f64> {
    for (name, v) in [("v0_j", v0_j), ("e_r_j", e_r_j)] {
        if v <= 0.0 || !v.is_finite() {
            return Err(Error::InvalidParameter { name, value: v });
        }
    }
    let x = v0_j / e_r_j;
    Ok(e_r_j / (2.0 * HBAR) * (-(PI * PI / 4.0) * x.sqrt()).exp() * x.sqrt() * (1.0 + x))
}

/// Minimum interaction strength that protects the self-trapped detection
/// states against a site offset epsilon: V_min = 8 epsilon / N.
pub fn metastability_bound(epsilon_hz: f64, n: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "n",
            value: 0.0,
        });
    }
    if epsilon_hz < 0.0 || !epsilon_hz.is_finite() {
        return Err(Error::InvalidParameter {
            name: "epsilon_hz",
            value: epsilon_hz,
        });
    }
    Ok(8.0 * epsilon_hz / n as f64)
}

/// Companion to the metastability bound: largest offset a given interaction
/// strength tolerates, epsilon_max = N V / 8.
pub fn max_tolerable_offset(v_hz: f64, n: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "n",
            value: 0.0,
        });
    }
    if v_hz < 0.0 || !v_hz.is_finite() {
        return Err(Error::InvalidParameter {
            name: "v_hz",
            value: v_hz,
        });
    }
    Ok(n as f64 * v_hz / 8.0)
}

/// Short-time sensitivity and the rotation precision after repeated runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityReport {
    /// Sensitivity S, rad s^-1 / sqrt(Hz).
    pub s: f64,
    /// Number of runs n = tau / t_omega.
    pub n_runs: u64,
    /// Total integration time, s.
    pub tau_s: f64,
    /// Rotation precision after n runs: Delta omega = S / sqrt(tau).
    pub delta_omega: f64,
}

/// Pair-correlated-input sensitivity
/// S = (h / L^2 m) sqrt(3) / (sqrt(2 t_omega) J N), with
/// Delta omega = S / sqrt(tau) for integration time tau = n t_omega.
pub fn sensitivity(
    j_hz: f64,
    n_atoms: u32,
    t_omega_s: f64,
    ring_length_m: f64,
    atom_mass_kg: f64,
    tau_s: f64,
) -> Result<SensitivityReport> {
    for (name, v) in [
        ("j_hz", j_hz),
        ("t_omega_s", t_omega_s),
        ("ring_length_m", ring_length_m),
        ("atom_mass_kg", atom_mass_kg),
        ("tau_s", tau_s),
    ] {
        if v <= 0.0 || !v.is_finite() {
            return Err(Error::InvalidParameter { name, value: v });
        }
    }
    if n_atoms == 0 {
        return Err(Error::InvalidParameter {
            name: "n_atoms",
            value: 0.0,
        });
    }
    let ratio = tau_s / t_omega_s;
    let n_runs = ratio.round();
    if n_runs < 1.0 || (ratio - n_runs).abs() > 1e-9 * ratio.max(1.0) {
        return Err(Error::InvalidParameter {
            name: "tau_s",
            value: tau_s,
        });
    }
    let s = PLANCK_H / (ring_length_m * ring_length_m * atom_mass_kg) * 3f64.sqrt()
        / ((2.0 * t_omega_s).sqrt() * j_hz * n_atoms as f64);
    Ok(SensitivityReport {
        s,
        n_runs: n_runs as u64,
        tau_s,
        delta_omega: s / tau_s.sqrt(),
    })
}

/// Perturbation levels and schedule parameters for the fidelity sweep.
/// High-coupling segments run at j_high on the active links with residual
/// interactions v_high everywhere; during the offset holds the barriers are
/// up, leaving residual coupling j_low, interactions v_low, and the site
/// offset that realizes the phase step over offset_hold_s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPerturbation {
    pub v_high_hz: f64,
    pub v_low_hz: f64,
    pub j_low_hz: f64,
    pub j_high_hz: f64,
    pub theta_rad: f64,
    pub t_omega_s: f64,
    pub offset_hold_s: f64,
}

impl Default for SweepPerturbation {
    fn default() -> Self {
        SweepPerturbation {
            v_high_hz: 1e-3,
            v_low_hz: 1e-2,
            j_low_hz: 1e-2,
            j_high_hz: 10.0,
            theta_rad: PI / 100.0,
            t_omega_s: 1.0,
            offset_hold_s: 500e-9,
        }
    }
}

impl SweepPerturbation {
    /// All perturbations switched off; the sweep then compares two routes to
    /// the same ideal evolution.
    pub fn unperturbed() -> Self {
        SweepPerturbation {
            v_high_hz: 0.0,
            v_low_hz: 0.0,
            j_low_hz: 0.0,
            ..SweepPerturbation::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("v_high_hz", self.v_high_hz),
            ("v_low_hz", self.v_low_hz),
            ("j_low_hz", self.j_low_hz),
        ] {
            if v < 0.0 || !v.is_finite() {
                return Err(Error::InvalidParameter { name, value: v });
            }
        }
        for (name, v) in [
            ("j_high_hz", self.j_high_hz),
            ("t_omega_s", self.t_omega_s),
            ("offset_hold_s", self.offset_hold_s),
        ] {
            if v <= 0.0 || !v.is_finite() {
                return Err(Error::InvalidParameter { name, value: v });
            }
        }
        if !self.theta_rad.is_finite() {
            return Err(Error::InvalidParameter {
                name: "theta_rad",
                value: self.theta_rad,
            });
        }
        Ok(())
    }
}

/// Fidelity between ideal and perturbed pipelines per atom number, with the
/// first N falling below 0.99.
#[derive(Debug, Clone)]
pub struct FidelityCurve {
    pub points: Vec<(u32, f64)>,
    pub threshold: Option<u32>,
}

impl FidelityCurve {
    pub fn fidelity(&self, n: u32) -> Option<f64> {
        self.points.iter().find(|(m, _)| *m == n).map(|(_, f)| *f)
    }
}

/// Offset hold under residual coupling and interactions, via a symmetric
/// split between the diagonal part (offset + interactions, applied exactly)
/// and the weak hopping (applied in short Taylor steps). Substep count keeps
/// the splitting error far below the gate tolerances even for offsets of
/// order 2 pi / (3 t_hold) with t_hold = 500 ns.
const OFFSET_HOLD_SUBSTEPS: usize = 512;

fn offset_hold(state: &StateVector, eps2_hz: f64, pert: &SweepPerturbation) -> Result<StateVector> {
    let basis = state.basis();
    let t = pert.offset_hold_s;
    let vl = pert.v_low_hz;
    let jl = pert.j_low_hz;
    let diag: Array1<f64> = basis
        .states()
        .iter()
        .map(|occ| {
            let mut d = eps2_hz * occ.count(2) as f64;
            for m in 0..3 {
                let nm = occ.count(m) as f64;
                d += vl * nm * (nm - 1.0);
            }
            d
        })
        .collect();
    if jl == 0.0 {
        let amp = Array1::from_shape_fn(diag.len(), |i| {
            state.amplitudes()[i] * C64::from_polar(1.0, -diag[i] * t)
        });
        return Ok(state.with_amplitudes(amp));
    }
    // directed-hop table: psi_dst += -jl * sqrt(n_src (n_dst + 1)) * psi_src
    let mut hops: Vec<(usize, usize, f64)> = Vec::new();
    for (i, occ) in basis.states().iter().enumerate() {
        for link in 0..3usize {
            for (dst, src) in [(link, (link + 1) % 3), ((link + 1) % 3, link)] {
                if occ.count(src) == 0 {
                    continue;
                }
                let mut next = [occ.count(0), occ.count(1), occ.count(2)];
                next[src] -= 1;
                next[dst] += 1;
                let j = basis
                    .index_of(&next)
                    .expect("hop stays within the fixed-N basis");
                let amp = -jl * ((occ.count(src) as f64) * (next[dst] as f64)).sqrt();
                hops.push((j, i, amp));
            }
        }
    }
    let apply_hop = |input: &Array1<C64>| -> Array1<C64> {
        let mut out = Array1::<C64>::zeros(input.len());
        for &(dst, src, amp) in &hops {
            out[dst] += input[src] * amp;
        }
        out
    };
    let k = OFFSET_HOLD_SUBSTEPS;
    let dt = t / k as f64;
    let half: Array1<C64> =
        diag.mapv(|d| C64::from_polar(1.0, -d * dt / 2.0));
    let full: Array1<C64> = diag.mapv(|d| C64::from_polar(1.0, -d * dt));
    let mut amp = state.amplitudes().to_owned();
    amp *= &half;
    for step in 0..k {
        // second-order Taylor of exp(-i P dt); ||P dt|| is tiny here
        let p1 = apply_hop(&amp);
        let p2 = apply_hop(&p1);
        let c = C64::new(0.0, -dt);
        ndarray::Zip::from(&mut amp).and(&p1).and(&p2).for_each(|a, &b1, &b2| {
            *a += c * b1 + 0.5 * c * c * b2;
        });
        if step + 1 < k {
            amp *= &full;
        }
    }
    amp *= &half;
    let mut out = state.with_amplitudes(amp);
    out.renormalize_recording_drift();
    Ok(out)
}

/// Fidelity between the ideal pair-correlated pipeline and its perturbed
/// twin at a single even atom number, both cut just before measurement.
pub fn interaction_fidelity_point(n: u32, pert: &SweepPerturbation) -> Result<f64> {
    let mut cfg = SchemeConfig::new(2, n);
    cfg.j_hz = pert.j_high_hz;
    cfg.v_hz = 0.0;
    cfg.theta_rad = pert.theta_rad;
    cfg.t_omega_s = pert.t_omega_s;
    cfg.detection_hold = false;
    let ideal = run_scheme2(&cfg)?.final_state;

    let basis = enumerate_basis(n, 3)?;
    let psi0 = fock_state(&basis, &[n / 2, n / 2, 0])?;
    let jh = pert.j_high_hz;
    let vh = [pert.v_high_hz; 3];
    let h_bs = build_bose_hubbard(
        &basis,
        &RingParams {
            j: [jh, pert.j_low_hz, pert.j_low_hz],
            v: vh,
            epsilon: [0.0; 3],
        },
    )?;
    let h_tr = build_bose_hubbard(
        &basis,
        &RingParams {
            j: [jh; 3],
            v: vh,
            epsilon: [0.0; 3],
        },
    )?;
    let h_rot = build_bose_hubbard_rotating(
        &basis,
        &RingParams {
            j: [jh; 3],
            v: vh,
            epsilon: [0.0; 3],
        },
        pert.theta_rad,
    )?;
    let t_hold = pert.offset_hold_s;
    let mut psi = evolve(&psi0, &h_bs, PI / (4.0 * jh))?;
    psi = evolve(&psi, &h_tr, 2.0 * PI / (9.0 * jh))?;
    psi = offset_hold(&psi, 4.0 * PI / (3.0 * t_hold), pert)?;
    psi = evolve(&psi, &h_rot, pert.t_omega_s)?;
    psi = offset_hold(&psi, 2.0 * PI / (3.0 * t_hold), pert)?;
    psi = evolve(&psi, &h_tr, 4.0 * PI / (9.0 * jh))?;
    psi = evolve(&psi, &h_bs, 3.0 * PI / (4.0 * jh))?;
    Ok(ideal.fidelity(&psi)?.clamp(0.0, 1.0))
}

/// Compare the pair-correlated pipeline against its perturbed twin for each
/// even N, cutting both runs just before measurement so the fidelity
/// isolates interaction and residual-coupling effects. Odd entries are
/// skipped (pair-correlated input needs even N).
pub fn interaction_fidelity_sweep(
    n_values: &[u32],
    pert: &SweepPerturbation,
) -> Result<FidelityCurve> {
    pert.validate()?;
    let mut ns: Vec<u32> = n_values
        .iter()
        .copied()
        .filter(|&n| n > 0 && n % 2 == 0)
        .collect();
    ns.sort_unstable();
    ns.dedup();
    if ns.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut points = Vec::with_capacity(ns.len());
    for &n in &ns {
        points.push((n, interaction_fidelity_point(n, pert)?));
    }
    let threshold = points.iter().find(|(_, f)| *f < 0.99).map(|(n, _)| *n);
    Ok(FidelityCurve { points, threshold })
}

/// Aggregated precision at one mean atom number under shot-to-shot
/// fluctuations.
#[derive(Debug, Clone, Copy)]
pub struct FluctuationPoint {
    pub n_mean: f64,
    pub sigma_n: f64,
    pub samples: usize,
    pub mean_qfi: f64,
    pub delta_phi: f64,
}

/// Fluctuation points across mean atom numbers with the fitted
/// log-log slope of delta_phi versus N_mean.
#[derive(Debug, Clone)]
pub struct FluctuationStudy {
    pub family: SchemeFamily,
    pub points: Vec<FluctuationPoint>,
    pub exponent: Option<f64>,
    pub seed: u64,
}

fn sample_atom_number<R: Rng>(family: SchemeFamily, n_mean: f64, sigma_n: f64, rng: &mut R) -> u32 {
    let x = if sigma_n == 0.0 {
        n_mean
    } else {
        Normal::new(n_mean, sigma_n)
            .expect("validated sigma")
            .sample(rng)
    };
    match family {
        // pair-correlated input: round to the nearest even count
        SchemeFamily::Bat => (2.0 * (x / 2.0).round()).max(2.0) as u32,
        _ => x.round().max(2.0) as u32,
    }
}

/// Monte Carlo estimate of the mean lossless QFI when the atom number
/// fluctuates around n_mean with spread sigma_n.
pub fn number_fluctuation_point<R: Rng>(
    family: SchemeFamily,
    n_mean: f64,
    sigma_n: f64,
    samples: usize,
    rng: &mut R,
) -> Result<FluctuationPoint> {
    if samples == 0 {
        return Err(Error::EmptySample);
    }
    if n_mean < 2.0 || !n_mean.is_finite() {
        return Err(Error::InvalidParameter {
            name: "n_mean",
            value: n_mean,
        });
    }
    if sigma_n < 0.0 || !sigma_n.is_finite() {
        return Err(Error::InvalidParameter {
            name: "sigma_n",
            value: sigma_n,
        });
    }
    let mut total = 0.0;
    for _ in 0..samples {
        let n = sample_atom_number(family, n_mean, sigma_n, rng);
        total += scheme_coefficients(family, n)?.pure_qfi();
    }
    let mean_qfi = total / samples as f64;
    Ok(FluctuationPoint {
        n_mean,
        sigma_n,
        samples,
        mean_qfi,
        delta_phi: 1.0 / mean_qfi.sqrt(),
    })
}

/// Run fluctuation points at sigma = sqrt(N_mean) across a grid of mean atom
/// numbers and fit the precision scaling exponent
/// d ln(delta_phi) / d ln(N_mean).
pub fn number_fluctuation_study(
    family: SchemeFamily,
    n_means: &[f64],
    samples: usize,
    seed: u64,
) -> Result<FluctuationStudy> {
    if n_means.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n_means.len());
    for &n_mean in n_means {
        points.push(number_fluctuation_point(
            family,
            n_mean,
            n_mean.max(0.0).sqrt(),
            samples,
            &mut rng,
        )?);
    }
    let exponent = fit_loglog_slope(&points);
    Ok(FluctuationStudy {
        family,
        points,
        exponent,
        seed,
    })
}

fn fit_loglog_slope(points: &[FluctuationPoint]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let xs: Vec<f64> = points.iter().map(|p| p.n_mean.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.delta_phi.ln()).collect();
    let xbar = xs.iter().sum::<f64>() / xs.len() as f64;
    let ybar = ys.iter().sum::<f64>() / ys.len() as f64;
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - xbar) * (y - ybar))
        .sum();
    Some(sxy / sxx)
}
