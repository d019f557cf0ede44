//! End-to-end acceptance gate. Each test covers one numbered criterion,
//! prints a single pass/fail line, and panics with full diagnostics on
//! failure. Run with `cargo test --test acceptance -- --nocapture` to see
//! every line.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ringsim::constants::{recoil_energy, MASS_RB87};
use ringsim::{
    apply_gate, apply_mode_phase, enumerate_basis, estimate_coupling, fock_state,
    interaction_fidelity_sweep, loss_qfi, loss_qfi_oracle, loss_sectors, number_fluctuation_study,
    pure_qfi, qfi_with_loss, rotation_phase, run_scheme, scheme_coefficients, sensitivity,
    FockBasis, GateSpec, LossConvention, LossModel, PrecisionContext, SchemeConfig, SchemeFamily,
    SchemeResult, StateVector, SweepPerturbation, C64,
};
use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

fn report(label: &str, fails: &[String]) {
    if fails.is_empty() {
        println!("acceptance {label}: pass");
    } else {
        println!("acceptance {label}: fail");
        panic!("{}", fails.join("\n"));
    }
}

fn check(fails: &mut Vec<String>, ok: bool, msg: impl FnOnce() -> String) {
    if !ok {
        fails.push(msg());
    }
}

fn random_state(basis: &Arc<FockBasis>, rng: &mut ChaCha8Rng) -> StateVector {
    let mut amp = Array1::<C64>::zeros(basis.dimension());
    for a in amp.iter_mut() {
        *a = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    }
    let norm: f64 = amp.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    amp.mapv_inplace(|z| z / norm);
    StateVector::from_amplitudes(basis.clone(), amp).unwrap()
}

fn run_with_snapshots(scheme: u8, n: u32) -> SchemeResult {
    let mut cfg = SchemeConfig::new(scheme, n);
    cfg.snapshots = true;
    run_scheme(&cfg).unwrap()
}

fn flow_snapshot(result: &SchemeResult, label: &str) -> StateVector {
    result
        .snapshots
        .as_ref()
        .unwrap()
        .iter()
        .find(|(l, _)| *l == label)
        .map(|(_, s)| s.clone())
        .unwrap()
}

fn max_amp_diff(a: &StateVector, b: &StateVector) -> f64 {
    a.amplitudes()
        .iter()
        .zip(b.amplitudes().iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Criterion 1: the three input classes reach the rotation stage carrying
/// precision resources N, N(N/2+1), and N^2, computed from the pipeline
/// states themselves.
#[test]
fn pure_state_precision_closed_forms() {
    let start = Instant::now();
    let mut fails = Vec::new();
    for n in 1u32..=20 {
        for scheme in [1u8, 2, 3] {
            if scheme == 2 && n % 2 == 1 {
                continue;
            }
            let result = run_with_snapshots(scheme, n);
            let flow = flow_snapshot(&result, "flow_before_rotation");
            // derivative of the flow state under the rotation generator
            let basis = flow.basis().clone();
            let dpsi = Array1::from_shape_fn(basis.dimension(), |i| {
                flow.amplitudes()[i] * C64::new(0.0, basis.states()[i].count(2) as f64)
            });
            let f_q = pure_qfi(flow.amplitudes(), dpsi.view()).unwrap();
            let nf = n as f64;
            let expect = match scheme {
                1 => nf,
                2 => nf * (nf / 2.0 + 1.0),
                _ => nf * nf,
            };
            check(&mut fails, (f_q - expect).abs() <= 1e-6 * expect, || {
                format!("scheme {scheme} N={n}: QFI {f_q} vs {expect}")
            });
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    check(&mut fails, elapsed < 60.0, || {
        format!("runtime {elapsed:.1}s exceeds 60s")
    });
    report("01 pipeline precision closed forms", &fails);
}

/// Criterion 2: gate pairs compose back to the identity (up to their
/// documented composition phases) on random states, and the single-particle
/// tritter matches the three-port splitter matrix up to a global phase.
#[test]
fn gate_composition_algebra() {
    let mut fails = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(12345);
    let j = 7.3;
    for n in 1u32..=8 {
        let basis = enumerate_basis(n, 3).unwrap();
        for _ in 0..4 {
            let psi = random_state(&basis, &mut rng);

            // splitter pair: composition multiplies each particle on the two
            // split modes by -1 and leaves the spectator mode alone
            let back = apply_gate(
                &apply_gate(&psi, &GateSpec::beam_splitter(j, (0, 1)).unwrap()).unwrap(),
                &GateSpec::inverse_beam_splitter(j, (0, 1)).unwrap(),
            )
            .unwrap();
            let fixed = apply_mode_phase(&apply_mode_phase(&back, 0, PI).unwrap(), 1, PI).unwrap();
            let dev = max_amp_diff(&psi, &fixed);
            check(&mut fails, dev < 1e-10, || {
                format!("splitter pair N={n}: deviation {dev}")
            });

            // tritter pair: global phase exp(-i 2 pi N / 3)
            let back = apply_gate(
                &apply_gate(&psi, &GateSpec::tritter(j).unwrap()).unwrap(),
                &GateSpec::inverse_tritter(j).unwrap(),
            )
            .unwrap();
            let phase = C64::from_polar(1.0, 2.0 * PI * n as f64 / 3.0);
            let restored = StateVector::from_amplitudes(
                basis.clone(),
                back.amplitudes().mapv(|z| z * phase),
            )
            .unwrap();
            let dev = max_amp_diff(&psi, &restored);
            check(&mut fails, dev < 1e-10, || {
                format!("tritter pair N={n}: deviation {dev}")
            });

            // phase-step pair: exact identity
            let back = apply_gate(
                &apply_gate(&psi, &GateSpec::phase_step_plus(1e6).unwrap()).unwrap(),
                &GateSpec::phase_step_minus(1e6).unwrap(),
            )
            .unwrap();
            let dev = max_amp_diff(&psi, &back);
            check(&mut fails, dev < 1e-10, || {
                format!("phase-step pair N={n}: deviation {dev}")
            });
        }
    }

    // single-particle tritter against the three-port splitter matrix
    let basis = enumerate_basis(1, 3).unwrap();
    let mut w = Array2::<C64>::zeros((3, 3));
    for col in 0..3usize {
        let mut occ = [0u32; 3];
        occ[col] = 1;
        let out = apply_gate(
            &fock_state(&basis, &occ).unwrap(),
            &GateSpec::tritter(10.0).unwrap(),
        )
        .unwrap();
        for row in 0..3usize {
            let mut target = [0u32; 3];
            target[row] = 1;
            w[(row, col)] = out.amplitude(&target).unwrap();
        }
    }
    let omega = C64::from_polar(1.0, 2.0 * PI / 3.0);
    let one = C64::new(1.0, 0.0);
    let s3 = Array2::from_shape_fn((3, 3), |(r, c)| {
        (if r == c { one } else { omega }) / C64::new(3f64.sqrt(), 0.0)
    });
    let global = w[(0, 0)] / s3[(0, 0)];
    check(&mut fails, (global.norm() - 1.0).abs() < 1e-10, || {
        format!("global factor not a phase: |{global}|")
    });
    let mut worst = 0.0f64;
    for r in 0..3 {
        for c in 0..3 {
            worst = worst.max((w[(r, c)] - global * s3[(r, c)]).norm());
        }
    }
    check(&mut fails, worst < 1e-10, || {
        format!("tritter matrix deviates from three-port splitter by {worst}")
    });

    report("02 gate composition algebra", &fails);
}

/// Criterion 3: with no rotation every scheme returns its input occupation.
#[test]
fn zero_rotation_revival() {
    let mut fails = Vec::new();
    for scheme in [1u8, 2, 3] {
        for n in 1u32..=10 {
            if scheme == 2 && n % 2 == 1 {
                continue;
            }
            let mut cfg = SchemeConfig::new(scheme, n);
            cfg.theta_rad = 0.0;
            let result = run_scheme(&cfg).unwrap();
            let init: &[u32] = if scheme == 2 {
                &[n / 2, n / 2, 0]
            } else {
                &[n, 0, 0]
            };
            let p = result.distribution.probability(init);
            check(&mut fails, (p - 1.0).abs() < 1e-8, || {
                format!("scheme {scheme} N={n}: revival probability {p}")
            });
        }
    }
    report("03 zero-rotation revival", &fails);
}

/// Criterion 4: the pipeline-extracted interferometer phase matches
/// 2 sqrt(3) J t sin(theta/3) across the parameter grid.
#[test]
fn rotation_phase_extraction() {
    let mut fails = Vec::new();
    for &theta in &[PI / 1000.0, PI / 100.0, PI / 10.0] {
        for &j in &[0.1, 1.0, 10.0] {
            for scheme in [1u8, 2] {
                let n = 6;
                let mut cfg = SchemeConfig::new(scheme, n);
                cfg.j_hz = j;
                cfg.theta_rad = theta;
                let result = run_scheme(&cfg).unwrap();
                let expect = rotation_phase(j, cfg.t_omega_s, theta);
                check(
                    &mut fails,
                    (result.phi_rad - expect).abs() < 1e-8,
                    || {
                        format!(
                            "scheme {scheme} J={j} theta={theta}: phi {} vs {expect}",
                            result.phi_rad
                        )
                    },
                );
            }
        }
    }
    report("04 rotation phase extraction", &fails);
}

/// Criterion 5: uncorrelated input detects as a binomial between the first
/// two sites; the all-or-nothing input detects as a two-point law.
#[test]
fn detection_laws() {
    let mut fails = Vec::new();

    let n = 8u32;
    let cfg = SchemeConfig::new(1, n);
    let result = run_scheme(&cfg).unwrap();
    let phi = rotation_phase(cfg.j_hz, cfg.t_omega_s, cfg.theta_rad);
    let p = (phi / 2.0).cos().powi(2);
    let binom = |k: u32| -> f64 {
        let mut c = 1.0f64;
        for i in 0..k {
            c = c * (n - i) as f64 / (i + 1) as f64;
        }
        c * p.powi((n - k) as i32) * (1.0 - p).powi(k as i32)
    };
    for k in 0..=n {
        let got = result.distribution.probability(&[n - k, k, 0]);
        check(&mut fails, (got - binom(k)).abs() < 1e-8, || {
            format!("binomial k={k}: {got} vs {}", binom(k))
        });
    }

    for n in [5u32, 8] {
        let cfg = SchemeConfig::new(3, n);
        let result = run_scheme(&cfg).unwrap();
        let phi = rotation_phase(cfg.j_hz, cfg.t_omega_s, cfg.theta_rad);
        let p_home = result.distribution.probability(&[n, 0, 0]);
        let p_swap = result.distribution.probability(&[0, n, 0]);
        let c2 = (n as f64 * phi / 2.0).cos().powi(2);
        let s2 = (n as f64 * phi / 2.0).sin().powi(2);
        check(&mut fails, (p_home - c2).abs() < 1e-8, || {
            format!("two-point N={n}: P(home) {p_home} vs {c2}")
        });
        check(&mut fails, (p_swap - s2).abs() < 1e-8, || {
            format!("two-point N={n}: P(swap) {p_swap} vs {s2}")
        });
        let stray = 1.0 - p_home - p_swap;
        check(&mut fails, stray.abs() < 1e-8, || {
            format!("two-point N={n}: stray weight {stray}")
        });
    }

    report("05 detection laws", &fails);
}

/// Criterion 6: loss sectors are complete across the transmissivity grid and
/// the lossless boundary reproduces the pure precision.
#[test]
fn loss_sector_completeness_and_boundaries() {
    let mut fails = Vec::new();
    let ctx = PrecisionContext::standard();
    for family in [
        SchemeFamily::Uncorrelated,
        SchemeFamily::Bat,
        SchemeFamily::Noon,
    ] {
        for n in 1u32..=20 {
            if family == SchemeFamily::Bat && n % 2 == 1 {
                continue;
            }
            let coeffs = scheme_coefficients(family, n).unwrap();
            for &eta in &[0.0, 0.25, 0.5, 0.75, 1.0] {
                let sectors = loss_sectors(&coeffs, &LossModel::new(eta).unwrap()).unwrap();
                let total: f64 = sectors.iter().map(|s| s.p).sum();
                check(&mut fails, (total - 1.0).abs() < 1e-10, || {
                    format!("{family:?} N={n} eta={eta}: sector sum {total}")
                });
            }
            let report = qfi_with_loss(family, n, 1.0, LossConvention::MixWithinLoss, &ctx).unwrap();
            let pure = coeffs.pure_qfi();
            check(&mut fails, (report.f_q - pure).abs() < 1e-8, || {
                format!("{family:?} N={n}: lossless boundary {} vs {pure}", report.f_q)
            });
        }
    }
    report("06 loss sector completeness and boundaries", &fails);
}

/// Criterion 7: the ten-atom precision-versus-loss sweep: lossless endpoints,
/// the all-or-nothing curve crossing above the uncorrelated one inside the
/// sweep, and the pair-correlated curve staying below it for eta >= 0.55.
#[test]
fn loss_precision_sweep_ten_atoms() {
    let start = Instant::now();
    let mut fails = Vec::new();
    let n = 10u32;
    let families = [
        SchemeFamily::Uncorrelated,
        SchemeFamily::Bat,
        SchemeFamily::Noon,
    ];
    let coeffs: Vec<_> = families
        .iter()
        .map(|&f| scheme_coefficients(f, n).unwrap())
        .collect();
    let mut rows: Vec<(f64, [f64; 3])> = Vec::new();
    for i in 0..=50u32 {
        let eta = 0.5 + 0.01 * i as f64;
        let model = LossModel::new(eta.min(1.0)).unwrap();
        let mut dphi = [0.0f64; 3];
        for (slot, c) in dphi.iter_mut().zip(&coeffs) {
            let f = loss_qfi(c, &model, LossConvention::MixWithinLoss).unwrap();
            *slot = if f > 0.0 { 1.0 / f.sqrt() } else { f64::INFINITY };
        }
        rows.push((eta, dphi));
    }

    let (eta_top, top) = rows.last().unwrap();
    check(&mut fails, (eta_top - 1.0).abs() < 1e-12, || {
        "grid must end at eta = 1".into()
    });
    for (k, expect) in [(0usize, 0.3162), (1, 0.1291), (2, 0.1)] {
        check(&mut fails, (top[k] - expect).abs() < 1e-3, || {
            format!("lossless endpoint {k}: {} vs {expect}", top[k])
        });
    }

    check(&mut fails, top[2] < top[0], || {
        "all-or-nothing must beat uncorrelated at eta = 1".into()
    });
    let crossing = rows
        .iter()
        .rev()
        .find(|(_, d)| d[2] > d[0])
        .map(|(eta, _)| *eta);
    match crossing {
        Some(eta_c) => check(&mut fails, eta_c > 0.5 && eta_c < 1.0, || {
            format!("crossing at eta = {eta_c} outside (0.5, 1)")
        }),
        None => fails.push("all-or-nothing curve never crosses above uncorrelated".into()),
    }

    for (eta, d) in &rows {
        if *eta >= 0.55 - 1e-12 {
            check(&mut fails, d[1] < d[0], || {
                format!("pair-correlated not below uncorrelated at eta = {eta}")
            });
        }
    }

    let elapsed = start.elapsed().as_secs_f64();
    check(&mut fails, elapsed < 300.0, || {
        format!("runtime {elapsed:.1}s exceeds 300s")
    });
    report("07 loss precision sweep", &fails);
}

/// Criterion 8: the SLD-based mixed-state QFI agrees with the independent
/// fidelity-difference oracle within 1% across schemes, sizes, and losses.
#[test]
fn sld_oracle_agreement() {
    let mut fails = Vec::new();
    for family in [
        SchemeFamily::Uncorrelated,
        SchemeFamily::Bat,
        SchemeFamily::Noon,
    ] {
        for n in 1u32..=10 {
            if family == SchemeFamily::Bat && n % 2 == 1 {
                continue;
            }
            let coeffs = scheme_coefficients(family, n).unwrap();
            for &eta in &[0.6, 0.8, 0.95] {
                let model = LossModel::new(eta).unwrap();
                let sld = loss_qfi(&coeffs, &model, LossConvention::MixWithinLoss).unwrap();
                let oracle =
                    loss_qfi_oracle(&coeffs, &model, LossConvention::MixWithinLoss, 1e-4).unwrap();
                let rel = (sld - oracle).abs() / oracle.max(1e-30);
                check(&mut fails, rel < 0.01, || {
                    format!("{family:?} N={n} eta={eta}: sld {sld} vs oracle {oracle} (rel {rel:.2e})")
                });
            }
        }
    }
    report("08 SLD versus fidelity oracle", &fails);
}

/// Criterion 9: interaction-induced fidelity decay of the pair-correlated
/// pipeline across even N up to 80; the 0.99 threshold falls in [40, 80].
#[test]
fn interaction_fidelity_threshold() {
    let start = Instant::now();
    let mut fails = Vec::new();
    let ns: Vec<u32> = (1..=40).map(|k| 2 * k).collect();
    let curve = interaction_fidelity_sweep(&ns, &SweepPerturbation::default()).unwrap();

    for &(n, f) in &curve.points {
        check(&mut fails, (0.0..=1.0 + 1e-9).contains(&f), || {
            format!("N={n}: fidelity {f} out of range")
        });
    }
    let first = curve.points.first().unwrap().1;
    let last = curve.points.last().unwrap().1;
    check(&mut fails, first > 0.999, || {
        format!("fidelity at N=2 is {first}")
    });
    check(&mut fails, last < first, || {
        format!("no downward trend: {first} -> {last}")
    });
    // least-squares slope of fidelity versus N
    let m = curve.points.len() as f64;
    let xbar = curve.points.iter().map(|(n, _)| *n as f64).sum::<f64>() / m;
    let ybar = curve.points.iter().map(|(_, f)| *f).sum::<f64>() / m;
    let slope: f64 = curve
        .points
        .iter()
        .map(|(n, f)| (*n as f64 - xbar) * (f - ybar))
        .sum::<f64>()
        / curve
            .points
            .iter()
            .map(|(n, _)| (*n as f64 - xbar).powi(2))
            .sum::<f64>();
    check(&mut fails, slope < 0.0, || {
        format!("fidelity trend slope {slope} is not negative")
    });
    match curve.threshold {
        Some(n_star) => check(&mut fails, (40..=80).contains(&n_star), || {
            format!("threshold N* = {n_star} outside [40, 80]")
        }),
        None => fails.push("fidelity never dropped below 0.99".into()),
    }

    let elapsed = start.elapsed().as_secs_f64();
    check(&mut fails, elapsed < 1800.0, || {
        format!("runtime {elapsed:.1}s exceeds 1800s")
    });
    if fails.is_empty() {
        println!(
            "  threshold N* = {:?}, fidelity {:.4} -> {:.4}, {:.0}s",
            curve.threshold, first, last, elapsed
        );
    }
    report("09 interaction fidelity threshold", &fails);
}

/// Criterion 10: the coupling estimate and short-time sensitivity land in
/// their physical windows.
#[test]
fn physical_rate_and_sensitivity_windows() {
    let mut fails = Vec::new();
    let e_r = recoil_energy(10e-6, MASS_RB87);
    let j = estimate_coupling(2.0 * e_r, e_r).unwrap();
    check(&mut fails, (5.0..=20.0).contains(&j), || {
        format!("coupling estimate {j} Hz outside [5, 20]")
    });
    let l = 2.0 * PI * 20e-6;
    let s = sensitivity(10.0, 60, 1.0, l, MASS_RB87, 1.0).unwrap().s;
    check(&mut fails, (3e-4..=3e-3).contains(&s), || {
        format!("sensitivity {s} outside [3e-4, 3e-3]")
    });
    report("10 physical rate and sensitivity windows", &fails);
}

/// Criterion 11: with sqrt(N) atom-number fluctuations the pair-correlated
/// precision keeps a near-Heisenberg scaling exponent.
#[test]
fn atom_number_fluctuation_scaling() {
    let mut fails = Vec::new();
    let study =
        number_fluctuation_study(SchemeFamily::Bat, &[8.0, 12.0, 16.0, 20.0], 200, 42).unwrap();
    let exponent = study.exponent.unwrap();
    check(&mut fails, (-1.0..=-0.8).contains(&exponent), || {
        format!("fitted exponent {exponent} outside [-1.0, -0.8]")
    });
    if fails.is_empty() {
        println!("  fitted exponent {exponent:.4}");
    }
    report("11 atom-number fluctuation scaling", &fails);
}
