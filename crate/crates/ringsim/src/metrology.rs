//! Precision analysis: pure-state quantum Fisher information, Cramer-Rao
//! bounds, the binomial loss channel on two-flow-mode states, mixed-state QFI
//! through the symmetric logarithmic derivative, and an independent
//! fidelity-based oracle for cross-checking the mixed-state path.

use crate::error::{Error, Result};
use crate::fock::binomial_u128;
use crate::linalg::{hermitian_deviation, singular_values, Spectrum, C64};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use std::f64::consts::PI;

/// Generic evaluation point for reports; the coefficient families carry
/// their phase dependence as e^{i m phi}, so results are phi-independent
/// (asserted by tests), and 0.3 rad avoids symmetry points.
pub const DEFAULT_PHI_RAD: f64 = 0.3;

/// Step for the finite-difference fidelity oracle.
pub const DEFAULT_ORACLE_DELTA: f64 = 1e-4;

/// Input families for the three schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeFamily {
    Uncorrelated,
    Bat,
    Noon,
}

impl SchemeFamily {
    pub fn from_scheme(scheme: u8) -> Result<Self> {
        match scheme {
            1 => Ok(SchemeFamily::Uncorrelated),
            2 => Ok(SchemeFamily::Bat),
            3 => Ok(SchemeFamily::Noon),
            other => Err(Error::InvalidParameter {
                name: "scheme",
                value: other as f64,
            }),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            SchemeFamily::Uncorrelated => "uncorrelated",
            SchemeFamily::Bat => "bat",
            SchemeFamily::Noon => "noon",
        }
    }
}

/// Amplitudes beta_m of |m atoms in alpha_{+1}, N-m in alpha_{-1}>, with the
/// rotation phase entering as e^{i m phi}.
#[derive(Debug, Clone)]
pub struct FlowCoefficients {
    n: u32,
    beta: Array1<C64>,
    phi: f64,
}

impl FlowCoefficients {
    pub fn new(beta: Array1<C64>, phi: f64) -> Result<Self> {
        if beta.is_empty() {
            return Err(Error::InvalidParameter {
                name: "beta_len",
                value: 0.0,
            });
        }
        let norm: f64 = beta.iter().map(|b| b.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::NotNormalized {
                deviation: (norm - 1.0).abs(),
            });
        }
        Ok(FlowCoefficients {
            n: (beta.len() - 1) as u32,
            beta,
            phi,
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn beta(&self) -> ArrayView1<'_, C64> {
        self.beta.view()
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn with_phi(&self, phi: f64) -> Self {
        FlowCoefficients {
            n: self.n,
            beta: self.beta.clone(),
            phi,
        }
    }

    /// beta_m e^{i m phi}.
    pub fn amplitudes(&self) -> Array1<C64> {
        Array1::from_shape_fn(self.beta.len(), |m| {
            self.beta[m] * C64::from_polar(1.0, m as f64 * self.phi)
        })
    }

    /// d/dphi of the amplitudes: i m beta_m e^{i m phi}.
    pub fn derivative(&self) -> Array1<C64> {
        Array1::from_shape_fn(self.beta.len(), |m| {
            self.beta[m] * C64::from_polar(1.0, m as f64 * self.phi) * C64::new(0.0, m as f64)
        })
    }

    /// Lossless QFI: 4 Var(m) over the |beta_m|^2 weights.
    pub fn pure_qfi(&self) -> f64 {
        let mut mean = 0.0;
        let mut mean_sq = 0.0;
        for (m, b) in self.beta.iter().enumerate() {
            let w = b.norm_sqr();
            mean += m as f64 * w;
            mean_sq += (m as f64) * (m as f64) * w;
        }
        (4.0 * (mean_sq - mean * mean)).max(0.0)
    }
}

fn ln_factorial(n: u32) -> f64 {
    (1..=n as u64).map(|k| (k as f64).ln()).sum()
}

/// The coefficient families the three schemes deliver to the rotation stage,
/// evaluated at the default report phase.
pub fn scheme_coefficients(family: SchemeFamily, n: u32) -> Result<FlowCoefficients> {
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "n",
            value: 0.0,
        });
    }
    let mut beta = Array1::<C64>::zeros(n as usize + 1);
    match family {
        SchemeFamily::Uncorrelated => {
            // i^m sqrt(C(N,m)/2^N)
            let ln2n = n as f64 * 2f64.ln();
            for m in 0..=n {
                let ln_c = ln_factorial(n) - ln_factorial(m) - ln_factorial(n - m);
                let mag = (0.5 * (ln_c - ln2n)).exp();
                beta[m as usize] = C64::from_polar(mag, m as f64 * PI / 2.0);
            }
        }
        SchemeFamily::Bat => {
            if !n.is_multiple_of(2) {
                return Err(Error::OddAtomNumber { n });
            }
            // i^{N/2} sqrt(m!) sqrt((N-m)!) / (2^{N/2} (m/2)! ((N-m)/2)!),
            // even m only
            let global = C64::from_polar(1.0, (n / 2) as f64 * PI / 2.0);
            for m in (0..=n).step_by(2) {
                let ln_mag = 0.5 * ln_factorial(m) + 0.5 * ln_factorial(n - m)
                    - (n / 2) as f64 * 2f64.ln()
                    - ln_factorial(m / 2)
                    - ln_factorial((n - m) / 2);
                beta[m as usize] = global * ln_mag.exp();
            }
        }
        SchemeFamily::Noon => {
            let r = C64::new(1.0 / 2f64.sqrt(), 0.0);
            beta[0] = r;
            beta[n as usize] = r;
        }
    }
    // analytic normalization holds; renormalize to keep the invariant exact
    // against rounding at large N
    let norm: f64 = beta.iter().map(|b| b.norm_sqr()).sum::<f64>().sqrt();
    beta.mapv_inplace(|b| b / norm);
    FlowCoefficients::new(beta, DEFAULT_PHI_RAD)
}

/// F_Q = 4 [ <psi'|psi'> - |<psi'|psi>|^2 ] for a normalized pure state.
pub fn pure_qfi(psi: ArrayView1<C64>, dpsi: ArrayView1<C64>) -> Result<f64> {
    if psi.len() != dpsi.len() {
        return Err(Error::BasisMismatch);
    }
    let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized {
            deviation: (norm - 1.0).abs(),
        });
    }
    let dd: f64 = dpsi.iter().map(|z| z.norm_sqr()).sum();
    let cross: C64 = dpsi
        .iter()
        .zip(psi.iter())
        .map(|(d, p)| d.conj() * p)
        .sum();
    Ok((4.0 * (dd - cross.norm_sqr())).max(0.0))
}

/// QFI of a flow-basis Fock state under the rotation generator: each
/// alpha_{+1} atom picks up e^{i phi}, so F_Q = 4 Var(n_{alpha_{+1}}).
pub fn flow_state_qfi(state: &crate::fock::StateVector) -> Result<f64> {
    let basis = state.basis();
    if basis.modes() != 3 {
        return Err(Error::UnsupportedGeometry {
            modes: basis.modes(),
        });
    }
    let mut mean = 0.0;
    let mut mean_sq = 0.0;
    for (amp, occ) in state.amplitudes().iter().zip(basis.states()) {
        let w = amp.norm_sqr();
        let m = occ.count(2) as f64;
        mean += m * w;
        mean_sq += m * m * w;
    }
    Ok((4.0 * (mean_sq - mean * mean)).max(0.0))
}

/// Delta phi = 1 / sqrt(F_Q).
pub fn crlb(f_q: f64) -> Result<f64> {
    if f_q.is_nan() || f_q <= 0.0 {
        return Err(Error::NoInformation { qfi: f_q });
    }
    Ok(1.0 / f_q.sqrt())
}

/// Equal transmissivity eta on both flow modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossModel {
    eta: f64,
}

impl LossModel {
    pub fn new(eta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::EtaOutOfRange { eta });
        }
        Ok(LossModel { eta })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }
}

/// One loss outcome: l atoms lost in total, l_alpha1 of them from the
/// alpha_{+1} mode.
#[derive(Debug, Clone)]
pub struct LossSector {
    pub l: u32,
    pub l_alpha1: u32,
    /// Probability of this outcome.
    pub p: f64,
    /// Normalized conditional state over j = surviving alpha_{+1} count,
    /// j = 0..=N-l.
    pub xi: Array1<C64>,
    /// Branching coefficients B entering each component (index j).
    pub b: Vec<f64>,
}

impl LossSector {
    /// Subnormalized sector vector sqrt(p) xi.
    pub fn vector(&self) -> Array1<C64> {
        let root = self.p.sqrt();
        self.xi.mapv(|z| z * root)
    }

    /// d/dphi of the subnormalized vector: component j carries e^{i m phi}
    /// with m = j + l_alpha1, so the derivative is i (j + l_alpha1) v_j.
    pub fn derivative(&self) -> Array1<C64> {
        let root = self.p.sqrt();
        Array1::from_shape_fn(self.xi.len(), |j| {
            self.xi[j] * root * C64::new(0.0, (j as u32 + self.l_alpha1) as f64)
        })
    }
}

fn binomial_f64(n: u32, k: u32) -> f64 {
    binomial_u128(n as u64, k as u64) as f64
}

/// Decompose the lossy state into (l, l_alpha1) outcomes.
///
/// Component m of the input maps into sector (l, l1) with branching weight
/// B^m = C(m, l1) C(N-m, l-l1) eta^{N-l} (1-eta)^l; the sector probability is
/// the squared norm of the branched vector and sectors that can never occur
/// are omitted.
pub fn loss_sectors(coeffs: &FlowCoefficients, model: &LossModel) -> Result<Vec<LossSector>> {
    let n = coeffs.n();
    let eta = model.eta();
    let amps = coeffs.amplitudes();
    let mut out = Vec::new();
    for l in 0..=n {
        let survive = (n - l) as i32;
        let env = eta.powi(survive) * (1.0 - eta).powi(l as i32);
        if env == 0.0 {
            continue;
        }
        for l1 in 0..=l {
            let l2 = l - l1;
            let dim = (n - l + 1) as usize;
            let mut v = Array1::<C64>::zeros(dim);
            let mut b = vec![0.0f64; dim];
            let mut p = 0.0;
            for j in 0..dim as u32 {
                let m = j + l1;
                if n < m || n - m < l2 {
                    continue;
                }
                let bj = binomial_f64(m, l1) * binomial_f64(n - m, l2) * env;
                b[j as usize] = bj;
                let vj = amps[m as usize] * bj.sqrt();
                v[j as usize] = vj;
                p += vj.norm_sqr();
            }
            if p == 0.0 {
                continue;
            }
            let root = p.sqrt();
            let xi = v.mapv(|z| z / root);
            out.push(LossSector {
                l,
                l_alpha1: l1,
                p,
                xi,
                b,
            });
        }
    }
    Ok(out)
}

/// How loss outcomes are grouped before the mixed-state QFI sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossConvention {
    /// Outcomes with the same total loss l mix into one density block
    /// (the environment records only how many atoms left, which is the
    /// partial-trace answer for this channel). Default.
    MixWithinLoss,
    /// Every (l, l_alpha1) outcome is its own orthogonal block, as if the
    /// environment also recorded which mode each lost atom came from.
    PerSectorBlocks,
}

/// Eigenvalues of rho and the matrix elements of drho/dphi in that
/// eigenbasis; the raw ingredients of the SLD-based QFI sum.
#[derive(Debug)]
pub struct SLDDecomposition {
    pub eigenvalues: Array1<f64>,
    pub drho_in_eigenbasis: Array2<C64>,
}

impl SLDDecomposition {
    pub fn new(rho: ArrayView2<C64>, drho: ArrayView2<C64>) -> Result<Self> {
        let scale = rho.iter().map(|z| z.norm()).fold(0.0f64, f64::max).max(1e-300);
        if hermitian_deviation(rho) > 1e-9 * scale {
            return Err(Error::NotHermitian {
                deviation: hermitian_deviation(rho),
            });
        }
        let dscale = drho.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        if hermitian_deviation(drho) > 1e-9 * dscale.max(1e-300) {
            return Err(Error::NotHermitian {
                deviation: hermitian_deviation(drho),
            });
        }
        let spec = Spectrum::eigh(rho)?;
        let max = spec.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
        let min = spec.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < -1e-12 * max.max(1.0) {
            return Err(Error::NotPositive {
                min_eigenvalue: min,
            });
        }
        let drho_in_eigenbasis = spec.transform_operator(drho);
        Ok(SLDDecomposition {
            eigenvalues: spec.eigenvalues,
            drho_in_eigenbasis,
        })
    }

    /// F_Q = sum_{i,j} 2 |drho_ij|^2 / (lambda_i + lambda_j), skipping pairs
    /// whose eigenvalue sum sits below the kernel floor.
    pub fn qfi(&self) -> f64 {
        let max = self.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
        let floor = 1e-12 * max.max(1e-300);
        let n = self.eigenvalues.len();
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                let denom = self.eigenvalues[i] + self.eigenvalues[j];
                if denom > floor {
                    total += 2.0 * self.drho_in_eigenbasis[(i, j)].norm_sqr() / denom;
                }
            }
        }
        total.max(0.0)
    }
}

/// Mixed-state QFI through the SLD eigenbasis formula. Subnormalized blocks
/// (trace = sector weight) are fine: the sum is block-additive over
/// orthogonal outcomes.
pub fn mixed_qfi(rho: ArrayView2<C64>, drho: ArrayView2<C64>) -> Result<f64> {
    Ok(SLDDecomposition::new(rho, drho)?.qfi())
}

/// Per-block (rho, drho) matrices of the lossy mixture under a grouping
/// convention.
fn loss_blocks(
    coeffs: &FlowCoefficients,
    model: &LossModel,
    convention: LossConvention,
) -> Result<Vec<(Array2<C64>, Array2<C64>)>> {
    let sectors = loss_sectors(coeffs, model)?;
    let mut blocks: Vec<(Array2<C64>, Array2<C64>)> = Vec::new();
    match convention {
        LossConvention::PerSectorBlocks => {
            for s in sectors {
                let v = s.vector();
                let dv = s.derivative();
                blocks.push((outer(&v, &v), sym_outer(&dv, &v)));
            }
        }
        LossConvention::MixWithinLoss => {
            let n = coeffs.n();
            for l in 0..=n {
                let dim = (n - l + 1) as usize;
                let mut rho = Array2::<C64>::zeros((dim, dim));
                let mut drho = Array2::<C64>::zeros((dim, dim));
                let mut any = false;
                for s in sectors.iter().filter(|s| s.l == l) {
                    let v = s.vector();
                    let dv = s.derivative();
                    rho += &outer(&v, &v);
                    drho += &sym_outer(&dv, &v);
                    any = true;
                }
                if any {
                    blocks.push((rho, drho));
                }
            }
        }
    }
    Ok(blocks)
}

fn outer(a: &Array1<C64>, b: &Array1<C64>) -> Array2<C64> {
    Array2::from_shape_fn((a.len(), b.len()), |(i, j)| a[i] * b[j].conj())
}

/// dv v^H + v dv^H.
fn sym_outer(dv: &Array1<C64>, v: &Array1<C64>) -> Array2<C64> {
    let mut m = outer(dv, v);
    let m2 = outer(v, dv);
    m += &m2;
    m
}

/// Total QFI of the lossy state: sum of block QFIs.
pub fn loss_qfi(
    coeffs: &FlowCoefficients,
    model: &LossModel,
    convention: LossConvention,
) -> Result<f64> {
    let mut total = 0.0;
    for (rho, drho) in loss_blocks(coeffs, model, convention)? {
        total += mixed_qfi(rho.view(), drho.view())?;
    }
    Ok(total)
}

/// Physical and geometric context for converting Delta phi into rotation
/// precision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecisionContext {
    pub j_hz: f64,
    pub t_omega_s: f64,
    pub theta_rad: f64,
    pub ring_length_m: f64,
    pub atom_mass_kg: f64,
}

impl PrecisionContext {
    pub fn standard() -> Self {
        PrecisionContext {
            j_hz: 10.0,
            t_omega_s: 1.0,
            theta_rad: PI / 100.0,
            ring_length_m: crate::schemes::DEFAULT_RING_LENGTH_M,
            atom_mass_kg: crate::constants::MASS_RB87,
        }
    }
}

/// Delta theta = sqrt(3) Delta phi / (2 J t cos(theta/3)), the inverse slope
/// of phi(theta).
pub fn delta_theta_from_phi(delta_phi: f64, ctx: &PrecisionContext) -> f64 {
    3f64.sqrt() * delta_phi / (2.0 * ctx.j_hz * ctx.t_omega_s * (ctx.theta_rad / 3.0).cos())
}

/// F_Q, Delta phi, Delta theta, Delta omega with the parameters that
/// produced them.
#[derive(Debug, Clone, Copy)]
pub struct PrecisionReport {
    pub family: SchemeFamily,
    pub n: u32,
    pub eta: f64,
    pub f_q: f64,
    pub delta_phi: f64,
    pub delta_theta: f64,
    pub delta_omega: f64,
    pub context: PrecisionContext,
}

/// QFI of the scheme family under loss, chained to rotation precision.
/// A zero-information result (eta = 0) reports infinite deltas.
pub fn qfi_with_loss(
    family: SchemeFamily,
    n: u32,
    eta: f64,
    convention: LossConvention,
    ctx: &PrecisionContext,
) -> Result<PrecisionReport> {
    let coeffs = scheme_coefficients(family, n)?;
    let model = LossModel::new(eta)?;
    let f_q = loss_qfi(&coeffs, &model, convention)?;
    let delta_phi = if f_q > 0.0 {
        1.0 / f_q.sqrt()
    } else {
        f64::INFINITY
    };
    let delta_theta = delta_theta_from_phi(delta_phi, ctx);
    let delta_omega = crate::schemes::omega_from_theta(
        delta_theta,
        ctx.ring_length_m,
        ctx.atom_mass_kg,
    )?;
    Ok(PrecisionReport {
        family,
        n,
        eta,
        f_q,
        delta_phi,
        delta_theta,
        delta_omega,
        context: *ctx,
    })
}

/// Nuclear norm of sqrt(rho) sqrt(sigma) with rank truncation on both
/// factors, so near-zero eigenvalue noise cannot pollute the square roots.
fn root_fidelity(rho: ArrayView2<C64>, sigma: ArrayView2<C64>) -> Result<f64> {
    let sa = {
        let spec = Spectrum::eigh(rho)?;
        let max = spec.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
        spec.sqrt_factor(1e-12 * max.max(1e-300))
    };
    let sb = {
        let spec = Spectrum::eigh(sigma)?;
        let max = spec.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
        spec.sqrt_factor(1e-12 * max.max(1e-300))
    };
    if sa.ncols() == 0 || sb.ncols() == 0 {
        return Ok(0.0);
    }
    // || sqrt(rho) sqrt(sigma) ||_1 = || SB^H SA ||_1 by unitary invariance
    let mut m = Array2::<C64>::zeros((sb.ncols(), sa.ncols()));
    for i in 0..sb.ncols() {
        for j in 0..sa.ncols() {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..sb.nrows() {
                acc += sb[(k, i)].conj() * sa[(k, j)];
            }
            m[(i, j)] = acc;
        }
    }
    Ok(singular_values(m.view())?.iter().sum())
}

/// Independent QFI estimate from the Uhlmann fidelity between rho(phi) and
/// rho(phi + delta): F_Q ~ 8 (1 - sqrt(F)) / delta^2.
pub fn fidelity_qfi_oracle(
    rho: ArrayView2<C64>,
    rho_shifted: ArrayView2<C64>,
    delta: f64,
) -> Result<f64> {
    if delta == 0.0 {
        return Err(Error::InvalidParameter {
            name: "delta",
            value: 0.0,
        });
    }
    let tr = |m: &ArrayView2<C64>| -> f64 { (0..m.nrows()).map(|i| m[(i, i)].re).sum() };
    for t in [tr(&rho), tr(&rho_shifted)] {
        if (t - 1.0).abs() > 1e-9 {
            return Err(Error::TraceMismatch {
                trace: t,
                expected: 1.0,
            });
        }
    }
    let root = root_fidelity(rho, rho_shifted)?;
    Ok(8.0 * (1.0 - root) / (delta * delta))
}

/// Assemble the lossy mixture as one block-diagonal matrix (direct sum over
/// the convention's blocks) for the fidelity oracle.
fn assemble_loss_density(
    coeffs: &FlowCoefficients,
    model: &LossModel,
    convention: LossConvention,
) -> Result<Array2<C64>> {
    let blocks = loss_blocks(coeffs, model, convention)?;
    let total: usize = blocks.iter().map(|(r, _)| r.nrows()).sum();
    let mut out = Array2::<C64>::zeros((total, total));
    let mut at = 0;
    for (rho, _) in &blocks {
        let d = rho.nrows();
        out.slice_mut(ndarray::s![at..at + d, at..at + d])
            .assign(rho);
        at += d;
    }
    Ok(out)
}

/// Fidelity-oracle estimate of the lossy QFI, fully independent of the SLD
/// path: evaluates the mixture at phi and phi + delta and differentiates the
/// Uhlmann fidelity numerically.
pub fn loss_qfi_oracle(
    coeffs: &FlowCoefficients,
    model: &LossModel,
    convention: LossConvention,
    delta: f64,
) -> Result<f64> {
    if delta == 0.0 {
        return Err(Error::InvalidParameter {
            name: "delta",
            value: 0.0,
        });
    }
    let rho = assemble_loss_density(coeffs, model, convention)?;
    let shifted = coeffs.with_phi(coeffs.phi() + delta);
    let rho_d = assemble_loss_density(&shifted, model, convention)?;
    let root = root_fidelity(rho.view(), rho_d.view())?;
    Ok(8.0 * (1.0 - root) / (delta * delta))
}
