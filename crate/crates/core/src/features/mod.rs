//! Spectrogram frontends (log-mel and PCEN), pooling and export.

mod export;
mod matrix;
mod mel;
mod pool;
mod spectrogram;
mod stft;

pub use export::{
    read_tensor_file, render_png, spectrogram_pixels, write_tensor_file, Tensor, TENSOR_MAGIC,
    TENSOR_VERSION,
};
pub use matrix::Matrix;
pub use mel::{hz_to_mel, mel_filterbank, mel_to_hz, MelParams};
pub use pool::{pool_features, FeatureVector};
pub use spectrogram::{
    extract_spectrogram, mel_power, pcen, power_to_db, DbParams, FeatureConfig, PcenParams,
    SpectrogramMatrix, SpectrogramUnit,
};
pub use stft::{stft_power, StftParams, WindowKind};
