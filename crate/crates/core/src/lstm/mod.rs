//! LSTM sequence regressor, trained by backpropagation through time.

mod model;
mod persist;
mod train;

pub use model::{sigmoid, Activation, Gate, LstmModel, LstmState, StepTrace, Workspace};
pub use persist::{
    decode_models, dump_text, encode_models, load_ensemble, load_model, save_ensemble, save_model,
    FORMAT_VERSION,
};
pub use train::{
    ensemble_predict, retrain_ensemble, train, train_ensemble, train_from, BatchPolicy, Ensemble,
    EpochRecord, Optimizer, RunSummary, TrainConfig, TrainOutcome,
};
