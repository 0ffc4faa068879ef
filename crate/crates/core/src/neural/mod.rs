//! Feed-forward and LSTM networks with hand-written backpropagation, trained
//! by minibatch SGD with Nesterov momentum and early stopping.

mod ffnn;
mod lstm;
mod sgd;

pub use ffnn::{ffnn_forward, ffnn_loss_and_grad, ffnn_train, FfnnCache, FfnnModel, Mode};
pub use lstm::{
    lstm_cell_step, lstm_forward_cycle, lstm_forward_many, lstm_loss_and_grad, lstm_train, LstmModel, SequenceBatch,
};
pub use sgd::{
    clip_by_norm, split_validation_cycles, train_loop, EpochRecord, Nesterov, SgdConfig, TrainHistory,
};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the activation output `a`.
    pub fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
            Activation::Identity => 1.0,
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "relu" => Some(Activation::Relu),
            "tanh" => Some(Activation::Tanh),
            "identity" | "linear" => Some(Activation::Identity),
            _ => None,
        }
    }
}

#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}
