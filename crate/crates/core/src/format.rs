//! JSON file formats: channel files, capacity results, CSI certificates and
//! policy files.

use serde::de::{Deserializer, Error as _};
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelTables, NostChannel};
use crate::error::{Error, Result};
use crate::solver::{CapacityResult, CertificateStatus, CsiCertificate, Setting};

fn rectangular2<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Vec<f64>>, D::Error> {
    let rows = Vec::<Vec<f64>>::deserialize(d)?;
    if let Some(first) = rows.first() {
        if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != first.len()) {
            return Err(D::Error::custom(format!(
                "row {i} has {} entries but row 0 has {}",
                row.len(),
                first.len()
            )));
        }
    }
    Ok(rows)
}

fn rectangular3<'de, D: Deserializer<'de>>(
    d: D,
) -> std::result::Result<Vec<Vec<Vec<f64>>>, D::Error> {
    let blocks = Vec::<Vec<Vec<f64>>>::deserialize(d)?;
    let shape = |b: &Vec<Vec<f64>>| (b.len(), b.first().map_or(0, Vec::len));
    if let Some(first) = blocks.first() {
        let expected = shape(first);
        for (s, block) in blocks.iter().enumerate() {
            if let Some((x, row)) = block.iter().enumerate().find(|(_, r)| r.len() != expected.1) {
                return Err(D::Error::custom(format!(
                    "entry [{s}][{x}] has {} outputs but [0][0] has {}",
                    row.len(),
                    expected.1
                )));
            }
            if block.len() != expected.0 {
                return Err(D::Error::custom(format!(
                    "entry [{s}] has {} inputs but [0] has {}",
                    block.len(),
                    expected.0
                )));
            }
        }
    }
    Ok(blocks)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelFile {
    x_size: usize,
    y_size: usize,
    s_size: usize,
    #[serde(deserialize_with = "rectangular3")]
    q_y_given_x_sprime: Vec<Vec<Vec<f64>>>,
    #[serde(deserialize_with = "rectangular2")]
    q_s_given_y: Vec<Vec<f64>>,
}

/// 1-based line of the first occurrence of `"key"`, if any.
fn key_line(text: &str, key: &str) -> Option<usize> {
    let needle = format!("\"{key}\"");
    text.find(&needle)
        .map(|pos| text[..pos].bytes().filter(|&b| b == b'\n').count() + 1)
}

/// Parses a channel file. Syntax errors, non-finite numbers and ragged
/// tables are reported with their line; shape disagreements with the declared
/// sizes name the table and the line of its key.
pub fn parse_channel_tables(text: &str) -> Result<ChannelTables> {
    let file: ChannelFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let tables = ChannelTables {
        x_size: file.x_size,
        y_size: file.y_size,
        s_size: file.s_size,
        q_y_given_x_sprime: file.q_y_given_x_sprime,
        q_s_given_y: file.q_s_given_y,
    };
    let qy_shape = (
        tables.q_y_given_x_sprime.len(),
        tables.q_y_given_x_sprime.first().map_or(0, Vec::len),
        tables
            .q_y_given_x_sprime
            .first()
            .and_then(|b| b.first())
            .map_or(0, Vec::len),
    );
    let qs_shape = (
        tables.q_s_given_y.len(),
        tables.q_s_given_y.first().map_or(0, Vec::len),
    );
    let line = |key| key_line(text, key).map_or(String::new(), |l| format!(" at line {l}"));
    if qy_shape != (tables.s_size, tables.x_size, tables.y_size) {
        return Err(Error::Parse(format!(
            "q_y_given_x_sprime{} has shape {}×{}×{} but the sizes declare |S|×|X|×|Y| = {}×{}×{}",
            line("q_y_given_x_sprime"),
            qy_shape.0,
            qy_shape.1,
            qy_shape.2,
            tables.s_size,
            tables.x_size,
            tables.y_size
        )));
    }
    if qs_shape != (tables.y_size, tables.s_size) {
        return Err(Error::Parse(format!(
            "q_s_given_y{} has shape {}×{} but the sizes declare |Y|×|S| = {}×{}",
            line("q_s_given_y"),
            qs_shape.0,
            qs_shape.1,
            tables.y_size,
            tables.s_size
        )));
    }
    Ok(tables)
}

/// Parses and validates a channel file, optionally normalizing rows first.
pub fn read_channel(text: &str, normalize: bool) -> Result<NostChannel> {
    let mut tables = parse_channel_tables(text)?;
    if normalize {
        tables.normalize();
    }
    NostChannel::try_from(tables)
}

pub fn channel_to_json(c: &NostChannel) -> String {
    serde_json::to_string_pretty(&c.to_tables()).expect("channel tables serialize")
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct ResultRecord {
    pub setting: Setting,
    pub value_bits: f64,
    pub policy: Vec<Vec<f64>>,
    pub pi: Vec<f64>,
    pub gap: f64,
    pub stationarity_residual: f64,
    pub iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub support_sizes: Option<Vec<usize>>,
    #[serde(
        rename = "cardinality_bound_L",
        skip_serializing_if = "Option::is_none",
        default
    )]
    pub cardinality_bound: Option<usize>,
}

impl From<&CapacityResult> for ResultRecord {
    fn from(r: &CapacityResult) -> Self {
        Self {
            setting: r.setting,
            value_bits: r.value_bits,
            policy: r.policy.to_nested(),
            pi: r.pi.pi.clone(),
            gap: r.gap,
            stationarity_residual: r.stationarity_residual,
            iterations: r.iterations,
            support_sizes: r.support_sizes.clone(),
            cardinality_bound: r.cardinality_bound,
        }
    }
}

pub fn result_to_json(r: &CapacityResult) -> String {
    serde_json::to_string_pretty(&ResultRecord::from(r)).expect("result serializes")
}

#[derive(Debug, Serialize)]
struct CertificateRecord {
    status: CertificateStatus,
    p2_policy: Option<Vec<Vec<f64>>>,
    max_kernel_mismatch: Option<f64>,
    entropy_slack_bits: Option<f64>,
}

pub fn certificate_to_json(cert: &CsiCertificate) -> String {
    let record = CertificateRecord {
        status: cert.status,
        p2_policy: cert.p2_policy.as_ref().map(|p| p.to_nested()),
        max_kernel_mismatch: cert
            .max_kernel_mismatch
            .is_finite()
            .then_some(cert.max_kernel_mismatch),
        entropy_slack_bits: cert.entropy_slack.is_finite().then_some(cert.entropy_slack),
    };
    serde_json::to_string_pretty(&record).expect("certificate serializes")
}

/// A policy read from disk, with the setting it was solved for when known.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyFile {
    pub rows: Vec<Vec<f64>>,
    pub setting: Option<Setting>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PolicyFileRepr {
    Bare(Vec<Vec<f64>>),
    Object {
        policy: Vec<Vec<f64>>,
        #[serde(default)]
        setting: Option<String>,
    },
}

/// Accepts a bare `[y'][a]` array or any object with a `policy` key (such as a
/// result file written by `solve`).
pub fn parse_policy(text: &str) -> Result<PolicyFile> {
    let repr: PolicyFileRepr =
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    Ok(match repr {
        PolicyFileRepr::Bare(rows) => PolicyFile {
            rows,
            setting: None,
        },
        PolicyFileRepr::Object { policy, setting } => {
            let setting = match setting.as_deref() {
                None => None,
                Some("FB") => Some(Setting::Fb),
                Some("FB_CSI") => Some(Setting::FbCsi),
                Some(other) => return Err(Error::Parse(format!("unknown setting {other:?}"))),
            };
            PolicyFile {
                rows: policy,
                setting,
            }
        }
    })
}
