//! JSON checkpoint files for trained models.
//!
//! The document stores the problem dimensions the model was built for
//! (R, T, d), the architecture (hidden width, layer count, head bounds,
//! interference mode) and the raw parameter arrays with their shapes;
//! a training run may append its optimizer moments and iteration
//! counter so it can be resumed. JSON serializes f64 values in
//! shortest-round-trip form, so save followed by load is bit exact.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use uwmmse_core::model::{GcnLayer, GcnParams, ModelParams, ReductionFilter};
use uwmmse_core::train::AdamState;
use uwmmse_core::InterferenceMode;

pub const VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("malformed checkpoint: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported checkpoint version {0}, expected {VERSION}")]
    BadVersion(u32),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct LayerDoc {
    pub in_dim: usize,
    pub out_dim: usize,
    /// Row-major in_dim × out_dim.
    pub w_self: Vec<f64>,
    pub w_neigh: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct GcnDoc {
    pub layer1: LayerDoc,
    pub layer2: LayerDoc,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct OmegaDoc {
    /// Length R·T, index r·T + t.
    pub weights: Vec<f64>,
    pub bias: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct OptimizerDoc {
    pub iteration: u64,
    pub adam_step: u64,
    pub adam_m: Vec<f64>,
    pub adam_v: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Checkpoint {
    pub version: u32,
    pub rx: usize,
    pub tx: usize,
    pub streams: usize,
    pub hidden: usize,
    pub layers: usize,
    pub a_max: f64,
    pub b_max: f64,
    pub interference_mode: String,
    pub theta_a: GcnDoc,
    pub theta_b: GcnDoc,
    pub omega: OmegaDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<OptimizerDoc>,
}

fn layer_doc(l: &GcnLayer) -> LayerDoc {
    LayerDoc {
        in_dim: l.in_dim,
        out_dim: l.out_dim,
        w_self: l.w_self.clone(),
        w_neigh: l.w_neigh.clone(),
        bias: l.bias.clone(),
    }
}

fn layer_from_doc(doc: &LayerDoc, name: &str) -> Result<GcnLayer, CheckpointError> {
    let n = doc.in_dim * doc.out_dim;
    if doc.w_self.len() != n || doc.w_neigh.len() != n || doc.bias.len() != doc.out_dim {
        return Err(CheckpointError::Invalid(format!(
            "{name}: arrays do not match the declared {}x{} shape",
            doc.in_dim, doc.out_dim
        )));
    }
    Ok(GcnLayer {
        in_dim: doc.in_dim,
        out_dim: doc.out_dim,
        w_self: doc.w_self.clone(),
        w_neigh: doc.w_neigh.clone(),
        bias: doc.bias.clone(),
    })
}

impl Checkpoint {
    pub fn from_params(
        params: &ModelParams,
        rx: usize,
        tx: usize,
        streams: usize,
        mode: InterferenceMode,
        optimizer: Option<(&AdamState, u64)>,
    ) -> Self {
        Self {
            version: VERSION,
            rx,
            tx,
            streams,
            hidden: params.theta_a.hidden,
            layers: params.layers,
            a_max: params.a_max,
            b_max: params.b_max,
            interference_mode: mode.label().to_string(),
            theta_a: GcnDoc {
                layer1: layer_doc(&params.theta_a.layer1),
                layer2: layer_doc(&params.theta_a.layer2),
            },
            theta_b: GcnDoc {
                layer1: layer_doc(&params.theta_b.layer1),
                layer2: layer_doc(&params.theta_b.layer2),
            },
            omega: OmegaDoc { weights: params.omega.weights.clone(), bias: params.omega.bias },
            optimizer: optimizer.map(|(adam, iteration)| OptimizerDoc {
                iteration,
                adam_step: adam.step,
                adam_m: adam.m.clone(),
                adam_v: adam.v.clone(),
            }),
        }
    }

    pub fn interference_mode(&self) -> Result<InterferenceMode, CheckpointError> {
        self.interference_mode
            .parse()
            .map_err(|e| CheckpointError::Invalid(format!("{e}")))
    }

    /// Rebuilds the parameter set and validates it against the stored
    /// dimensions.
    pub fn to_params(&self) -> Result<ModelParams, CheckpointError> {
        let params = ModelParams {
            theta_a: GcnParams {
                hidden: self.hidden,
                layer1: layer_from_doc(&self.theta_a.layer1, "theta_a.layer1")?,
                layer2: layer_from_doc(&self.theta_a.layer2, "theta_a.layer2")?,
            },
            theta_b: GcnParams {
                hidden: self.hidden,
                layer1: layer_from_doc(&self.theta_b.layer1, "theta_b.layer1")?,
                layer2: layer_from_doc(&self.theta_b.layer2, "theta_b.layer2")?,
            },
            omega: ReductionFilter { weights: self.omega.weights.clone(), bias: self.omega.bias },
            layers: self.layers,
            a_max: self.a_max,
            b_max: self.b_max,
        };
        params
            .validate(self.rx, self.tx)
            .map_err(|e| CheckpointError::Invalid(format!("{e}")))?;
        if self.streams == 0 || self.streams > self.rx.min(self.tx) {
            return Err(CheckpointError::Invalid(format!(
                "streams d={} incompatible with R={} T={}",
                self.streams, self.rx, self.tx
            )));
        }
        self.interference_mode()?;
        if let Some(opt) = &self.optimizer {
            let n = params.param_count();
            if opt.adam_m.len() != n || opt.adam_v.len() != n {
                return Err(CheckpointError::Invalid(format!(
                    "optimizer moments have {} entries, model has {n} parameters",
                    opt.adam_m.len()
                )));
            }
        }
        Ok(params)
    }

    pub fn adam_state(&self) -> Option<AdamState> {
        self.optimizer.as_ref().map(|o| AdamState {
            m: o.adam_m.clone(),
            v: o.adam_v.clone(),
            step: o.adam_step,
        })
    }
}

pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<(), CheckpointError> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, ckpt)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, CheckpointError> {
    let r = BufReader::new(File::open(path)?);
    let ckpt: Checkpoint = serde_json::from_reader(r)?;
    if ckpt.version != VERSION {
        return Err(CheckpointError::BadVersion(ckpt.version));
    }
    Ok(ckpt)
}
