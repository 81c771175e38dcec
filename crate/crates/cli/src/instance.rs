//! Instance file formats: JSON documents with a top-level `kind`
//! discriminator. Matrices are row-major nested arrays. Probability
//! rows are validated on load: drift up to 1e-9 is accepted silently,
//! drift up to 1e-6 is renormalized with a warning on stderr, anything
//! worse is a schema error.

use crate::CliError;
use gbll_core::crsim::JointSource;
use gbll_core::gaussian::GaussianInstance;
use gbll_core::measures::{Channel, FiniteMeasure, GbllInstance};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum InstanceFile {
    #[serde(rename = "discrete-gbll")]
    DiscreteGbll {
        #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
        metadata: BTreeMap<String, String>,
        mu: Vec<f64>,
        /// One row-stochastic kernel per output, `channels[j][x][y]`.
        channels: Vec<Vec<Vec<f64>>>,
        /// Reference measures; omitted means the push-forwards of `mu`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        nus: Option<Vec<Vec<f64>>>,
        weights: Vec<f64>,
    },
    #[serde(rename = "gaussian")]
    Gaussian {
        #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
        metadata: BTreeMap<String, String>,
        sigma: Vec<Vec<f64>>,
        /// Omniscient form: coordinate blocks of the given dimensions
        /// observed noiselessly (`X = Y^m`).
        #[serde(default, skip_serializing_if = "Option::is_none")]
        blocks: Option<Vec<usize>>,
        /// Explicit form: per-output linear maps and noise covariances.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        maps: Option<Vec<Vec<Vec<f64>>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        noise: Option<Vec<Vec<Vec<f64>>>>,
        weights: Vec<f64>,
    },
    #[serde(rename = "cr-scheme")]
    CrScheme {
        #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
        metadata: BTreeMap<String, String>,
        source: SourceSpec,
        n: usize,
        k_size: usize,
        w_sizes: Vec<usize>,
        construction: Construction,
    },
    #[serde(rename = "bounds-query")]
    BoundsQuery {
        #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
        metadata: BTreeMap<String, String>,
        /// Fixed message rates for the sweep.
        r_j: Vec<f64>,
        /// Weight vectors to sweep.
        c_grid: Vec<Vec<f64>>,
        /// Precomputed `d*` per grid row.
        dstar_values: Vec<f64>,
        /// Optional rate points to check against the region.
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        points: Vec<RatePointSpec>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    pub terminal_sizes: Vec<usize>,
    pub probs: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", deny_unknown_fields)]
pub enum Construction {
    #[serde(rename = "random-binning")]
    RandomBinning { seed: u64 },
    #[serde(rename = "explicit")]
    Explicit {
        encoder: Vec<Vec<f64>>,
        decoders: Vec<Vec<Vec<f64>>>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatePointSpec {
    pub r: f64,
    pub r_j: Vec<f64>,
}

pub fn load(path: &Path) -> Result<InstanceFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?;
    parse(&text).map_err(|e| match e {
        CliError::Schema(msg) => CliError::Schema(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse(text: &str) -> Result<InstanceFile, CliError> {
    let file: InstanceFile = serde_json::from_str(text).map_err(|e| {
        CliError::Schema(format!("line {}, column {}: {e}", e.line(), e.column()))
    })?;
    Ok(file)
}

pub fn to_json(file: &InstanceFile) -> String {
    serde_json::to_string_pretty(file).expect("instance files serialize")
}

/// Validates a probability vector per the load policy, renormalizing
/// small drift. Returns the cleaned vector.
fn clean_probability(raw: &[f64], what: &str) -> Result<Vec<f64>, CliError> {
    if raw.is_empty() {
        return Err(CliError::Schema(format!("{what}: empty probability vector")));
    }
    if raw.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(CliError::Schema(format!(
            "{what}: entries must be finite and nonnegative"
        )));
    }
    let sum: f64 = raw.iter().sum();
    let drift = (sum - 1.0).abs();
    if drift <= 1e-9 {
        Ok(raw.to_vec())
    } else if drift <= 1e-6 {
        eprintln!("warning: {what} sums to {sum}; renormalizing");
        Ok(raw.iter().map(|p| p / sum).collect())
    } else {
        Err(CliError::Schema(format!(
            "{what}: probabilities sum to {sum}, outside tolerance"
        )))
    }
}

/// A loaded discrete instance plus its source-matched flag.
pub struct DiscreteInstance {
    pub instance: GbllInstance,
    /// True when the references are the push-forwards of `mu` (the
    /// configuration in which `d*` and smoothing are meaningful).
    pub source_matched: bool,
}

pub fn build_discrete(
    mu: &[f64],
    channels: &[Vec<Vec<f64>>],
    nus: &Option<Vec<Vec<f64>>>,
    weights: &[f64],
) -> Result<DiscreteInstance, CliError> {
    let mu = FiniteMeasure::new(clean_probability(mu, "mu")?)
        .map_err(|e| CliError::Schema(e.to_string()))?;
    let mut chs = Vec::with_capacity(channels.len());
    for (j, rows) in channels.iter().enumerate() {
        let mut cleaned = Vec::with_capacity(rows.len());
        for (x, row) in rows.iter().enumerate() {
            cleaned.push(clean_probability(row, &format!("channel {j} row {x}"))?);
        }
        chs.push(Channel::new(cleaned).map_err(|e| CliError::Schema(e.to_string()))?);
    }
    let source_matched = nus.is_none();
    let instance = match nus {
        None => GbllInstance::from_source(mu, chs, weights.to_vec()),
        Some(nus) => {
            let mut refs = Vec::with_capacity(nus.len());
            for (j, raw) in nus.iter().enumerate() {
                if raw.iter().any(|p| !p.is_finite() || *p < 0.0) {
                    return Err(CliError::Schema(format!(
                        "nu {j}: entries must be finite and nonnegative"
                    )));
                }
                // Reference measures may be unnormalized by design.
                refs.push(
                    FiniteMeasure::new(raw.clone())
                        .map_err(|e| CliError::Schema(format!("nu {j}: {e}")))?,
                );
            }
            GbllInstance::new(mu, chs, refs, weights.to_vec())
        }
    }
    .map_err(|e| CliError::Schema(e.to_string()))?;
    Ok(DiscreteInstance {
        instance,
        source_matched,
    })
}

pub fn build_gaussian(
    sigma: &[Vec<f64>],
    blocks: &Option<Vec<usize>>,
    maps: &Option<Vec<Vec<Vec<f64>>>>,
    noise: &Option<Vec<Vec<Vec<f64>>>>,
    weights: &[f64],
) -> Result<GaussianInstance, CliError> {
    let to_matrix = |rows: &[Vec<f64>], what: &str| -> Result<DMatrix<f64>, CliError> {
        if rows.is_empty() || rows.iter().any(|r| r.len() != rows[0].len()) {
            return Err(CliError::Schema(format!("{what}: ragged or empty matrix")));
        }
        let flat: Vec<f64> = rows.iter().flatten().cloned().collect();
        if flat.iter().any(|v| !v.is_finite()) {
            return Err(CliError::Schema(format!("{what}: non-finite entry")));
        }
        Ok(DMatrix::from_row_slice(
            rows.len(),
            rows[0].len(),
            &flat,
        ))
    };
    let sigma = to_matrix(sigma, "sigma")?;
    match (blocks, maps, noise) {
        (Some(blocks), None, None) => {
            GaussianInstance::omniscient(sigma, blocks, weights.to_vec())
                .map_err(|e| CliError::Schema(e.to_string()))
        }
        (None, Some(maps), Some(noise)) => {
            let maps = maps
                .iter()
                .enumerate()
                .map(|(j, m)| to_matrix(m, &format!("map {j}")))
                .collect::<Result<Vec<_>, _>>()?;
            let noise = noise
                .iter()
                .enumerate()
                .map(|(j, m)| to_matrix(m, &format!("noise {j}")))
                .collect::<Result<Vec<_>, _>>()?;
            GaussianInstance::new(sigma, maps, noise, weights.to_vec())
                .map_err(|e| CliError::Schema(e.to_string()))
        }
        _ => Err(CliError::Schema(
            "gaussian files need either `blocks` or both `maps` and `noise`".into(),
        )),
    }
}

pub fn build_source(spec: &SourceSpec) -> Result<JointSource, CliError> {
    let probs = FiniteMeasure::new(clean_probability(&spec.probs, "source probs")?)
        .map_err(|e| CliError::Schema(e.to_string()))?;
    JointSource::new(spec.terminal_sizes.clone(), probs).map_err(|e| CliError::Schema(e.to_string()))
}

/// Semantic equality for round-trip checks: same kind and numerically
/// identical payloads.
pub fn semantically_equal(a: &InstanceFile, b: &InstanceFile) -> bool {
    // Serialized canonical form is a faithful witness because serde_json
    // prints f64 losslessly.
    serde_json::to_value(a).ok() == serde_json::to_value(b).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn demos_dir() -> PathBuf {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../demos")
    }

    #[test]
    fn demo_files_round_trip() {
        for entry in std::fs::read_dir(demos_dir()).expect("demos directory") {
            let path = entry.unwrap().path();
            if path.extension().and_then(|e| e.to_str()) != Some("json") {
                continue;
            }
            let file = load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            let text = to_json(&file);
            let reparsed = parse(&text).expect("serialized file parses");
            assert!(
                semantically_equal(&file, &reparsed),
                "round trip failed for {}",
                path.display()
            );
        }
    }

    #[test]
    fn drifted_probabilities_renormalize_within_policy() {
        let built = build_discrete(
            &[0.3000000004, 0.7],
            &[vec![vec![0.9, 0.1], vec![0.1, 0.9]]],
            &None,
            &[1.0],
        )
        .unwrap();
        assert!(built.instance.mu.is_probability());
        // Beyond 1e-6: schema error.
        assert!(build_discrete(
            &[0.31, 0.7],
            &[vec![vec![0.9, 0.1], vec![0.1, 0.9]]],
            &None,
            &[1.0],
        )
        .is_err());
    }

    #[test]
    fn unknown_fields_rejected() {
        let text = r#"{"kind": "discrete-gbll", "mu": [1.0], "channels": [[[1.0]]],
                       "weights": [1.0], "extra": 3}"#;
        assert!(parse(text).is_err());
    }
}
