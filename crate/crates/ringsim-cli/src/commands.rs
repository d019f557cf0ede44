//! Command execution: library calls per experiment kind, a worker pool for
//! sweep points, and artifact emission in deterministic grid order.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use ringsim::{
    delta_theta_from_phi, flow_state_qfi, interaction_fidelity_point, number_fluctuation_study,
    omega_from_theta, qfi_with_loss, run_scheme, sensitivity, PrecisionContext, SchemeConfig,
    SchemeFamily,
};

use crate::config::{CommandKind, ExperimentConfig};
use crate::output::{plot_script, render_csv, write_file, CliError, ResultRecord};

pub struct Artifacts {
    pub csv_path: PathBuf,
    pub plot_path: Option<PathBuf>,
    pub rows: usize,
}

pub fn execute(
    config: &ExperimentConfig,
    out_dir: &Path,
    seed_override: Option<u64>,
    threads: Option<usize>,
) -> Result<Artifacts, CliError> {
    let diags = config.validate();
    if !diags.is_empty() {
        return Err(CliError::Validation(diags));
    }
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::invariant(out_dir.display().to_string(), e.to_string()))?;
    let seed = seed_override.or(config.seed).unwrap_or(0);

    let (records, trailing) = match threads {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| CliError::invariant("--threads", e.to_string()))?;
            pool.install(|| run_command(config, seed))?
        }
        None => run_command(config, seed)?,
    };

    let label = config.command.label();
    let csv_name = config
        .output
        .csv
        .clone()
        .unwrap_or_else(|| format!("{}.csv", label.replace('-', "_")));
    let csv_path = out_dir.join(&csv_name);
    write_file(&csv_path, &render_csv(&records, &trailing)?)?;

    let plot_path = if config.command.is_sweep() {
        let name = config
            .output
            .plot
            .clone()
            .unwrap_or_else(|| format!("plot_{}.py", label.replace('-', "_")));
        let path = out_dir.join(&name);
        let script = plot_script(label, &csv_name).expect("sweep commands have plot scripts");
        write_file(&path, &script)?;
        #[cfg(unix)]
        {
            use std::os::unix::fs::PermissionsExt;
            let _ = std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755));
        }
        Some(path)
    } else {
        None
    };

    Ok(Artifacts {
        csv_path,
        plot_path,
        rows: records.len(),
    })
}

fn run_command(
    config: &ExperimentConfig,
    seed: u64,
) -> Result<(Vec<ResultRecord>, Vec<String>), CliError> {
    match config.command {
        CommandKind::RunScheme => run_scheme_rows(config),
        CommandKind::LossSweep => loss_sweep_rows(config),
        CommandKind::FidelitySweep => fidelity_sweep_rows(config),
        CommandKind::Sensitivity => sensitivity_rows(config),
        CommandKind::FluctuationStudy => fluctuation_rows(config, seed),
    }
}

fn context_for(cfg: &SchemeConfig) -> PrecisionContext {
    PrecisionContext {
        j_hz: cfg.j_hz,
        t_omega_s: cfg.t_omega_s,
        theta_rad: cfg.theta_rad,
        ring_length_m: cfg.ring_length_m,
        atom_mass_kg: cfg.atom_mass_kg,
    }
}

fn base_record(command: &'static str, cfg: &SchemeConfig) -> ResultRecord {
    ResultRecord {
        command,
        scheme: Some(cfg.scheme),
        n: Some(cfg.n as f64),
        theta_rad: Some(cfg.theta_rad),
        j_hz: Some(cfg.j_hz),
        t_omega_s: Some(cfg.t_omega_s),
        ..ResultRecord::default()
    }
}

fn run_scheme_rows(
    config: &ExperimentConfig,
) -> Result<(Vec<ResultRecord>, Vec<String>), CliError> {
    let mut cfg = config.scheme.resolve();
    cfg.snapshots = true;
    let result = run_scheme(&cfg)?;
    let flow = result
        .snapshots
        .as_ref()
        .and_then(|snaps| snaps.iter().find(|(l, _)| *l == "flow_before_rotation"))
        .map(|(_, s)| s)
        .expect("pipelines snapshot the flow state");
    let qfi = flow_state_qfi(flow)?;
    let delta_phi = if qfi > 0.0 {
        1.0 / qfi.sqrt()
    } else {
        f64::INFINITY
    };
    let ctx = context_for(&cfg);
    let delta_theta = delta_theta_from_phi(delta_phi, &ctx);
    let delta_omega = omega_from_theta(delta_theta, cfg.ring_length_m, cfg.atom_mass_kg)?;

    let init: [u32; 3] = if cfg.scheme == 2 {
        [cfg.n / 2, cfg.n / 2, 0]
    } else {
        [cfg.n, 0, 0]
    };
    let p_return = result.distribution.probability(&init);

    let mut record = base_record("run-scheme", &cfg);
    record.qfi = Some(qfi);
    record.delta_phi_rad = Some(delta_phi);
    record.delta_theta_rad = Some(delta_theta);
    record.delta_omega_rad_s = Some(delta_omega);
    record.extra = format!("phi_rad={};p_return={}", result.phi_rad, p_return);
    Ok((vec![record], Vec::new()))
}

fn loss_sweep_rows(
    config: &ExperimentConfig,
) -> Result<(Vec<ResultRecord>, Vec<String>), CliError> {
    let cfg = config.scheme.resolve();
    let ctx = context_for(&cfg);
    let (conv, conv_label) = config.sweep.convention();

    let grid: Vec<(u8, f64)> = config
        .sweep
        .schemes
        .iter()
        .flat_map(|&s| config.sweep.eta.iter().map(move |&eta| (s, eta)))
        .collect();
    let reports = grid
        .par_iter()
        .map(|&(s, eta)| {
            let family = SchemeFamily::from_scheme(s)?;
            qfi_with_loss(family, cfg.n, eta, conv, &ctx)
        })
        .collect::<Result<Vec<_>, ringsim::Error>>()?;

    let records = grid
        .iter()
        .zip(&reports)
        .map(|(&(s, eta), report)| {
            let mut record = base_record("loss-sweep", &cfg);
            record.scheme = Some(s);
            record.eta = Some(eta);
            record.qfi = Some(report.f_q);
            record.delta_phi_rad = Some(report.delta_phi);
            record.delta_theta_rad = Some(report.delta_theta);
            record.delta_omega_rad_s = Some(report.delta_omega);
            record.extra = format!("convention={conv_label}");
            record
        })
        .collect();
    Ok((records, Vec::new()))
}

fn fidelity_sweep_rows(
    config: &ExperimentConfig,
) -> Result<(Vec<ResultRecord>, Vec<String>), CliError> {
    let pert = config.perturbation.resolve();
    let mut ns = config.sweep.n.clone();
    ns.sort_unstable();
    ns.dedup();

    let fids = ns
        .par_iter()
        .map(|&n| interaction_fidelity_point(n, &pert))
        .collect::<Result<Vec<_>, ringsim::Error>>()?;
    let threshold = ns
        .iter()
        .zip(&fids)
        .find(|(_, &f)| f < 0.99)
        .map(|(&n, _)| n);

    let records = ns
        .iter()
        .zip(&fids)
        .map(|(&n, &f)| {
            let mut record = ResultRecord {
                command: "fidelity-sweep",
                scheme: Some(2),
                n: Some(n as f64),
                theta_rad: Some(pert.theta_rad),
                j_hz: Some(pert.j_high_hz),
                t_omega_s: Some(pert.t_omega_s),
                fidelity: Some(f),
                ..ResultRecord::default()
            };
            if threshold == Some(n) {
                record.extra = "threshold=true".into();
            }
            record
        })
        .collect();
    Ok((records, Vec::new()))
}

fn sensitivity_rows(
    config: &ExperimentConfig,
) -> Result<(Vec<ResultRecord>, Vec<String>), CliError> {
    let cfg = config.scheme.resolve();
    let tau = config.scheme.tau_s(&cfg);
    let report = sensitivity(
        cfg.j_hz,
        cfg.n,
        cfg.t_omega_s,
        cfg.ring_length_m,
        cfg.atom_mass_kg,
        tau,
    )?;
    let mut record = base_record("sensitivity", &cfg);
    record.scheme = None;
    record.theta_rad = None;
    record.delta_omega_rad_s = Some(report.delta_omega);
    record.extra = format!(
        "s={};runs={};tau_s={}",
        report.s, report.n_runs, report.tau_s
    );
    Ok((vec![record], Vec::new()))
}

fn fluctuation_rows(
    config: &ExperimentConfig,
    seed: u64,
) -> Result<(Vec<ResultRecord>, Vec<String>), CliError> {
    let cfg = config.scheme.resolve();
    let ctx = context_for(&cfg);
    let family = SchemeFamily::from_scheme(cfg.scheme)?;
    let samples = config.sweep.samples.unwrap_or(200);
    let study = number_fluctuation_study(family, &config.sweep.n_mean, samples, seed)?;

    let records = study
        .points
        .iter()
        .map(|point| {
            let delta_theta = delta_theta_from_phi(point.delta_phi, &ctx);
            let delta_omega =
                omega_from_theta(delta_theta, cfg.ring_length_m, cfg.atom_mass_kg)?;
            let mut record = base_record("fluctuation-study", &cfg);
            record.n = Some(point.n_mean);
            record.qfi = Some(point.mean_qfi);
            record.delta_phi_rad = Some(point.delta_phi);
            record.delta_theta_rad = Some(delta_theta);
            record.delta_omega_rad_s = Some(delta_omega);
            record.extra = format!(
                "sigma_n={};samples={};seed={}",
                point.sigma_n, point.samples, study.seed
            );
            Ok(record)
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    let trailing = study
        .exponent
        .map(|e| vec![format!("fit_exponent={e}")])
        .unwrap_or_default();
    Ok((records, trailing))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> ExperimentConfig {
        toml::from_str(text).unwrap()
    }

    #[test]
    fn zero_rotation_run_returns_home_with_certainty() {
        let config = parse(
            "command = \"run-scheme\"\n[scheme]\nscheme = 3\nn = 4\ntheta_rad = 0.0\n",
        );
        let (records, trailing) = run_command(&config, 0).unwrap();
        assert_eq!(records.len(), 1);
        assert!(trailing.is_empty());
        let p_return: f64 = records[0]
            .extra
            .split(';')
            .find_map(|kv| kv.strip_prefix("p_return="))
            .unwrap()
            .parse()
            .unwrap();
        assert!((p_return - 1.0).abs() < 1e-8);
        let qfi = records[0].qfi.unwrap();
        assert!((qfi - 16.0).abs() < 1e-8);
    }

    #[test]
    fn loss_sweep_rows_follow_grid_order() {
        let config = parse(
            "command = \"loss-sweep\"\n[scheme]\nn = 4\n[sweep]\nschemes = [3, 1]\neta = [1.0, 0.8]\n",
        );
        let (records, _) = run_command(&config, 0).unwrap();
        let order: Vec<(u8, f64)> = records
            .iter()
            .map(|r| (r.scheme.unwrap(), r.eta.unwrap()))
            .collect();
        assert_eq!(order, vec![(3, 1.0), (3, 0.8), (1, 1.0), (1, 0.8)]);
        let qfi_noon = records[0].qfi.unwrap();
        assert!((qfi_noon - 16.0).abs() < 1e-8);
    }

    #[test]
    fn fidelity_rows_sorted_with_threshold_unset_for_tiny_n() {
        let config = parse("command = \"fidelity-sweep\"\n[sweep]\nn = [4, 2]\n");
        let (records, _) = run_command(&config, 0).unwrap();
        assert_eq!(records[0].n, Some(2.0));
        assert_eq!(records[1].n, Some(4.0));
        for record in &records {
            assert!(record.fidelity.unwrap() > 0.999);
            assert!(record.extra.is_empty());
        }
    }

    #[test]
    fn fluctuation_rows_record_seed_and_exponent() {
        let config = parse(
            "command = \"fluctuation-study\"\n[scheme]\nscheme = 2\n[sweep]\nn_mean = [4.0, 8.0]\nsamples = 10\n",
        );
        let (records, trailing) = run_command(&config, 7).unwrap();
        assert_eq!(records.len(), 2);
        assert!(records[0].extra.contains("seed=7"));
        assert_eq!(trailing.len(), 1);
        assert!(trailing[0].starts_with("fit_exponent="));
    }
}
