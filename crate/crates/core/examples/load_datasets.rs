//! Reads MNIST (IDX) and CIFAR-10 (binary batches) from a directory. With
//! no argument, synthetic images are first written in both formats to a
//! scratch directory and read back.
//!
//! ```text
//! cargo run --release --example load_datasets [data_dir]
//! ```

use std::path::{Path, PathBuf};

use hybrid_rfm::data::{
    encode_cifar10, encode_idx_images, encode_idx_labels, load_cifar10, load_mnist, synth_dataset, subsample,
    SynthSpec,
};
use hybrid_rfm::{Error, Result};

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn scratch() -> Result<PathBuf> {
    let dir = std::env::temp_dir().join("hybrid_rfm_formats");
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mnist = synth_dataset(&SynthSpec {
        n: 60,
        n_test: 1,
        n_features: 28 * 28,
        ..SynthSpec::default()
    })?
    .train;
    write(&dir.join("train-images-idx3-ubyte"), &encode_idx_images(&mnist, 28, 28)?)?;
    write(&dir.join("train-labels-idx1-ubyte"), &encode_idx_labels(&mnist))?;
    let cifar = synth_dataset(&SynthSpec {
        n: 20,
        n_test: 1,
        n_features: 3072,
        ..SynthSpec::default()
    })?
    .train;
    write(&dir.join("data_batch_1.bin"), &encode_cifar10(&cifar)?)?;
    Ok(dir)
}

fn main() -> Result<()> {
    let dir = match std::env::args().nth(1) {
        Some(d) => PathBuf::from(d),
        None => scratch()?,
    };
    let mnist = load_mnist(dir.join("train-images-idx3-ubyte"), dir.join("train-labels-idx1-ubyte"))?;
    println!("{}: {} images x {} pixels", mnist.name, mnist.len(), mnist.n_features());
    let small = subsample(&mnist, mnist.len().min(32), 0)?;
    println!("subsample of {}: labels {:?}", small.len(), &small.labels[..small.len().min(12)]);

    let batches: Vec<PathBuf> = (1..=5)
        .map(|i| dir.join(format!("data_batch_{i}.bin")))
        .filter(|p| p.exists())
        .collect();
    let cifar = load_cifar10(&batches)?;
    println!("{}: {} images x {} values", cifar.name, cifar.len(), cifar.n_features());
    Ok(())
}
