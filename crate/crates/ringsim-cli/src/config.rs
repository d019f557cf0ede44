//! Experiment configuration: TOML grammar, resolution against library
//! defaults, and invariant checks with field-path diagnostics.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::Deserialize;

use ringsim::{LossConvention, QbsVariant, SchemeConfig, SweepPerturbation};

use crate::output::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    RunScheme,
    LossSweep,
    FidelitySweep,
    Sensitivity,
    FluctuationStudy,
}

impl CommandKind {
    pub fn label(self) -> &'static str {
        match self {
            CommandKind::RunScheme => "run-scheme",
            CommandKind::LossSweep => "loss-sweep",
            CommandKind::FidelitySweep => "fidelity-sweep",
            CommandKind::Sensitivity => "sensitivity",
            CommandKind::FluctuationStudy => "fluctuation-study",
        }
    }

    /// Sweep commands emit a plot script next to the CSV.
    pub fn is_sweep(self) -> bool {
        matches!(
            self,
            CommandKind::LossSweep | CommandKind::FidelitySweep | CommandKind::FluctuationStudy
        )
    }
}

/// Pipeline parameters; unset fields fall back to the library defaults.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSection {
    pub scheme: Option<u8>,
    pub n: Option<u32>,
    pub j_hz: Option<f64>,
    pub v_hz: Option<f64>,
    pub theta_rad: Option<f64>,
    pub t_omega_s: Option<f64>,
    pub ring_length_m: Option<f64>,
    pub atom_mass_kg: Option<f64>,
    pub tau_s: Option<f64>,
    pub qbs: Option<QbsName>,
    pub detection_hold: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QbsName {
    Ideal,
    Physical,
}

impl SchemeSection {
    pub fn resolve(&self) -> SchemeConfig {
        let mut cfg = SchemeConfig::new(self.scheme.unwrap_or(1), self.n.unwrap_or(10));
        if let Some(v) = self.j_hz {
            cfg.j_hz = v;
        }
        if let Some(v) = self.v_hz {
            cfg.v_hz = v;
        }
        if let Some(v) = self.theta_rad {
            cfg.theta_rad = v;
        }
        if let Some(v) = self.t_omega_s {
            cfg.t_omega_s = v;
        }
        if let Some(v) = self.ring_length_m {
            cfg.ring_length_m = v;
        }
        if let Some(v) = self.atom_mass_kg {
            cfg.atom_mass_kg = v;
        }
        if let Some(v) = self.qbs {
            cfg.qbs = match v {
                QbsName::Ideal => QbsVariant::Ideal,
                QbsName::Physical => QbsVariant::Physical,
            };
        }
        if let Some(v) = self.detection_hold {
            cfg.detection_hold = v;
        }
        cfg
    }

    pub fn tau_s(&self, cfg: &SchemeConfig) -> f64 {
        self.tau_s.unwrap_or(cfg.t_omega_s)
    }
}

/// Grids for the sweep commands.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Schemes traced by a loss sweep.
    #[serde(default)]
    pub schemes: Vec<u8>,
    /// Transmissivity grid for a loss sweep.
    #[serde(default)]
    pub eta: Vec<f64>,
    /// Atom-number grid for a fidelity sweep.
    #[serde(default)]
    pub n: Vec<u32>,
    /// Mean-atom-number grid for a fluctuation study.
    #[serde(default)]
    pub n_mean: Vec<f64>,
    /// Monte Carlo samples per fluctuation point.
    pub samples: Option<usize>,
    pub loss_convention: Option<LossConventionName>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossConventionName {
    MixWithinLoss,
    PerSectorBlocks,
}

impl LossConventionName {
    pub fn label(self) -> &'static str {
        match self {
            LossConventionName::MixWithinLoss => "mix-within-loss",
            LossConventionName::PerSectorBlocks => "per-sector-blocks",
        }
    }
}

impl SweepSection {
    pub fn convention(&self) -> (LossConvention, &'static str) {
        let name = self
            .loss_convention
            .unwrap_or(LossConventionName::MixWithinLoss);
        let conv = match name {
            LossConventionName::MixWithinLoss => LossConvention::MixWithinLoss,
            LossConventionName::PerSectorBlocks => LossConvention::PerSectorBlocks,
        };
        (conv, name.label())
    }
}

/// Overrides for the fidelity-sweep perturbation; unset fields fall back to
/// the library defaults.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSection {
    pub v_high_hz: Option<f64>,
    pub v_low_hz: Option<f64>,
    pub j_low_hz: Option<f64>,
    pub j_high_hz: Option<f64>,
    pub theta_rad: Option<f64>,
    pub t_omega_s: Option<f64>,
    pub offset_hold_s: Option<f64>,
}

impl PerturbationSection {
    pub fn resolve(&self) -> SweepPerturbation {
        let mut pert = SweepPerturbation::default();
        if let Some(v) = self.v_high_hz {
            pert.v_high_hz = v;
        }
        if let Some(v) = self.v_low_hz {
            pert.v_low_hz = v;
        }
        if let Some(v) = self.j_low_hz {
            pert.j_low_hz = v;
        }
        if let Some(v) = self.j_high_hz {
            pert.j_high_hz = v;
        }
        if let Some(v) = self.theta_rad {
            pert.theta_rad = v;
        }
        if let Some(v) = self.t_omega_s {
            pert.t_omega_s = v;
        }
        if let Some(v) = self.offset_hold_s {
            pert.offset_hold_s = v;
        }
        pert
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// CSV filename, relative to the output directory.
    pub csv: Option<String>,
    /// Plot script filename, relative to the output directory.
    pub plot: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: CommandKind,
    pub seed: Option<u64>,
    #[serde(default)]
    pub scheme: SchemeSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub perturbation: PerturbationSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// One violated invariant, addressed by config field path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub field: String,
    pub message: String,
}

impl Diagnostic {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

pub fn load(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

impl ExperimentConfig {
    /// Every violated invariant, in field order. Pure checks; nothing is
    /// simulated.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut diags = Vec::new();
        let cfg = self.scheme.resolve();

        if !(1..=3).contains(&cfg.scheme) {
            diags.push(Diagnostic::new("scheme.scheme", "must be 1, 2, or 3"));
        }
        if cfg.n == 0 {
            diags.push(Diagnostic::new("scheme.n", "must be at least 1"));
        }
        if cfg.scheme == 2 && cfg.n % 2 == 1 {
            diags.push(Diagnostic::new("scheme.n", "N must be even for scheme 2"));
        }
        check_positive(&mut diags, "scheme.j_hz", cfg.j_hz);
        check_nonnegative(&mut diags, "scheme.v_hz", cfg.v_hz);
        check_finite(&mut diags, "scheme.theta_rad", cfg.theta_rad);
        check_positive(&mut diags, "scheme.t_omega_s", cfg.t_omega_s);
        check_positive(&mut diags, "scheme.ring_length_m", cfg.ring_length_m);
        check_positive(&mut diags, "scheme.atom_mass_kg", cfg.atom_mass_kg);

        match self.command {
            CommandKind::RunScheme => {}
            CommandKind::LossSweep => {
                if self.sweep.schemes.is_empty() {
                    diags.push(Diagnostic::new(
                        "sweep.schemes",
                        "grid must be non-empty for loss-sweep",
                    ));
                }
                for (i, s) in self.sweep.schemes.iter().enumerate() {
                    if !(1..=3).contains(s) {
                        diags.push(Diagnostic::new(
                            format!("sweep.schemes[{i}]"),
                            "must be 1, 2, or 3",
                        ));
                    }
                    if *s == 2 && cfg.n % 2 == 1 {
                        diags.push(Diagnostic::new(
                            format!("sweep.schemes[{i}]"),
                            "scheme 2 requires an even scheme.n",
                        ));
                    }
                }
                if self.sweep.eta.is_empty() {
                    diags.push(Diagnostic::new(
                        "sweep.eta",
                        "grid must be non-empty for loss-sweep",
                    ));
                }
                for (i, eta) in self.sweep.eta.iter().enumerate() {
                    if !eta.is_finite() || !(0.0..=1.0).contains(eta) {
                        diags.push(Diagnostic::new(
                            format!("sweep.eta[{i}]"),
                            "eta out of [0, 1]",
                        ));
                    }
                }
            }
            CommandKind::FidelitySweep => {
                if self.sweep.n.is_empty() {
                    diags.push(Diagnostic::new(
                        "sweep.n",
                        "grid must be non-empty for fidelity-sweep",
                    ));
                }
                for (i, n) in self.sweep.n.iter().enumerate() {
                    if *n == 0 || *n % 2 == 1 {
                        diags.push(Diagnostic::new(
                            format!("sweep.n[{i}]"),
                            "must be a positive even atom number",
                        ));
                    }
                }
                let pert = self.perturbation.resolve();
                check_nonnegative(&mut diags, "perturbation.v_high_hz", pert.v_high_hz);
                check_nonnegative(&mut diags, "perturbation.v_low_hz", pert.v_low_hz);
                check_nonnegative(&mut diags, "perturbation.j_low_hz", pert.j_low_hz);
                check_positive(&mut diags, "perturbation.j_high_hz", pert.j_high_hz);
                check_finite(&mut diags, "perturbation.theta_rad", pert.theta_rad);
                check_positive(&mut diags, "perturbation.t_omega_s", pert.t_omega_s);
                check_positive(&mut diags, "perturbation.offset_hold_s", pert.offset_hold_s);
            }
            CommandKind::Sensitivity => {
                let tau = self.scheme.tau_s(&cfg);
                check_positive(&mut diags, "scheme.tau_s", tau);
                if tau.is_finite() && cfg.t_omega_s > 0.0 {
                    let ratio = tau / cfg.t_omega_s;
                    if (ratio - ratio.round()).abs() > 1e-9 || ratio < 0.5 {
                        diags.push(Diagnostic::new(
                            "scheme.tau_s",
                            "must be an integer multiple of scheme.t_omega_s",
                        ));
                    }
                }
            }
            CommandKind::FluctuationStudy => {
                if self.sweep.n_mean.is_empty() {
                    diags.push(Diagnostic::new(
                        "sweep.n_mean",
                        "grid must be non-empty for fluctuation-study",
                    ));
                }
                for (i, nm) in self.sweep.n_mean.iter().enumerate() {
                    if !nm.is_finite() || *nm < 2.0 {
                        diags.push(Diagnostic::new(
                            format!("sweep.n_mean[{i}]"),
                            "mean atom number must be at least 2",
                        ));
                    }
                }
                if self.sweep.samples == Some(0) {
                    diags.push(Diagnostic::new("sweep.samples", "must be at least 1"));
                }
            }
        }

        for (field, name) in [("output.csv", &self.output.csv), ("output.plot", &self.output.plot)]
        {
            if let Some(name) = name {
                if name.is_empty() {
                    diags.push(Diagnostic::new(field, "must not be empty"));
                }
            }
        }

        diags
    }
}

fn check_finite(diags: &mut Vec<Diagnostic>, field: &str, value: f64) {
    if !value.is_finite() {
        diags.push(Diagnostic::new(field, "must be finite"));
    }
}

fn check_positive(diags: &mut Vec<Diagnostic>, field: &str, value: f64) {
    if !value.is_finite() || value <= 0.0 {
        diags.push(Diagnostic::new(field, "must be positive"));
    }
}

fn check_nonnegative(diags: &mut Vec<Diagnostic>, field: &str, value: f64) {
    if !value.is_finite() || value < 0.0 {
        diags.push(Diagnostic::new(field, "must be non-negative"));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> ExperimentConfig {
        toml::from_str(text).unwrap()
    }

    #[test]
    fn minimal_config_resolves_library_defaults() {
        let config = parse("command = \"run-scheme\"");
        let cfg = config.scheme.resolve();
        assert_eq!(cfg.scheme, 1);
        assert_eq!(cfg.n, 10);
        assert_eq!(cfg.j_hz, 10.0);
        assert!(config.validate().is_empty());
    }

    #[test]
    fn odd_n_for_scheme_2_is_flagged_with_field_path() {
        let config = parse("command = \"run-scheme\"\n[scheme]\nscheme = 2\nn = 7\n");
        let diags = config.validate();
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].field, "scheme.n");
        assert!(diags[0].message.contains("even"));
    }

    #[test]
    fn loss_sweep_requires_grids_and_bounded_eta() {
        let config = parse("command = \"loss-sweep\"");
        let fields: Vec<_> = config.validate().into_iter().map(|d| d.field).collect();
        assert!(fields.contains(&"sweep.schemes".to_string()));
        assert!(fields.contains(&"sweep.eta".to_string()));

        let config = parse(
            "command = \"loss-sweep\"\n[sweep]\nschemes = [1]\neta = [0.5, 1.2]\n",
        );
        let diags = config.validate();
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].field, "sweep.eta[1]");
        assert!(diags[0].message.contains("[0, 1]"));
    }

    #[test]
    fn fidelity_sweep_rejects_odd_atom_numbers() {
        let config = parse("command = \"fidelity-sweep\"\n[sweep]\nn = [2, 5]\n");
        let diags = config.validate();
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].field, "sweep.n[1]");
    }

    #[test]
    fn sensitivity_requires_commensurate_integration_time() {
        let config = parse("command = \"sensitivity\"\n[scheme]\ntau_s = 1.5\n");
        let diags = config.validate();
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].field, "scheme.tau_s");
    }

    #[test]
    fn unknown_fields_are_parse_errors() {
        let err = toml::from_str::<ExperimentConfig>("command = \"run-scheme\"\nbogus = 1\n")
            .unwrap_err();
        assert!(err.to_string().contains("bogus"));
    }

    #[test]
    fn perturbation_overrides_merge_into_defaults() {
        let config = parse(
            "command = \"fidelity-sweep\"\n[sweep]\nn = [2]\n[perturbation]\nj_high_hz = 5.0\n",
        );
        let pert = config.perturbation.resolve();
        assert_eq!(pert.j_high_hz, 5.0);
        assert_eq!(pert.t_omega_s, SweepPerturbation::default().t_omega_s);
    }
}
