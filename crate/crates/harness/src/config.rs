use std::path::{Path, PathBuf};

use aeronav::airdata::{AeroCoefficients, LsFit, SequenceModel};
use aeronav::config::PredictorKind;
use aeronav::FilterConfig;

use crate::error::{HarnessError, Result};

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))
}

/// Parses a TOML configuration. Unknown keys are errors.
pub fn parse_config(text: &str) -> Result<FilterConfig> {
    let cfg: FilterConfig = toml::from_str(text)?;
    cfg.validate()?;
    Ok(cfg)
}

/// Accepts either a fit report written by `fit-aero` or bare coefficients.
pub fn parse_aero_model(text: &str) -> Result<AeroCoefficients> {
    if let Ok(fit) = serde_json::from_str::<LsFit>(text) {
        return Ok(fit.coefficients);
    }
    Ok(serde_json::from_str::<AeroCoefficients>(text)?)
}

fn resolve(base: &Path, file: &str) -> PathBuf {
    let p = Path::new(file);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Loads the configuration and any predictor model it references. Model paths
/// are relative to the configuration file.
pub fn load_config(path: &Path) -> Result<FilterConfig> {
    let mut cfg = parse_config(&read_text(path)?)?;
    let base = path.parent().unwrap_or(Path::new("."));
    load_models(&mut cfg, base)?;
    Ok(cfg)
}

pub fn load_models(cfg: &mut FilterConfig, base: &Path) -> Result<()> {
    if let Some(file) = cfg.filter.aero_model.clone() {
        cfg.models.aero = Some(parse_aero_model(&read_text(&resolve(base, &file))?)?);
    }
    if let Some(file) = cfg.filter.lstm_model.clone() {
        cfg.models.lstm = Some(SequenceModel::from_json(&read_text(&resolve(base, &file))?)?);
    }
    match cfg.filter.predictor {
        PredictorKind::Ls if cfg.models.aero.is_none() => {
            Err(HarnessError::Usage("predictor 'ls' needs filter.aero_model".into()))
        }
        PredictorKind::Lstm if cfg.models.lstm.is_none() => {
            Err(HarnessError::Usage("predictor 'lstm' needs filter.lstm_model".into()))
        }
        _ => Ok(()),
    }
}
