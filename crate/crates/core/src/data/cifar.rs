//! CIFAR-10 binary batches: 3073-byte records of one label byte followed by
//! 1024 red, 1024 green and 1024 blue pixel bytes.

use std::path::Path;

use super::Dataset;
use crate::error::{Error, Result};
use crate::numerics::Matrix;

pub const CIFAR_FEATURES: usize = 3072;
pub const CIFAR_RECORD: usize = CIFAR_FEATURES + 1;
const CIFAR_CLASSES: usize = 10;

fn check_batch(bytes: &[u8], name: &str) -> Result<()> {
    if !bytes.len().is_multiple_of(CIFAR_RECORD) {
        return Err(Error::Format {
            path: name.to_string(),
            offset: (bytes.len() - bytes.len() % CIFAR_RECORD) as u64,
            reason: format!(
                "file length {} is not a multiple of the {CIFAR_RECORD}-byte record size",
                bytes.len()
            ),
        });
    }
    for (r, rec) in bytes.chunks_exact(CIFAR_RECORD).enumerate() {
        if rec[0] as usize >= CIFAR_CLASSES {
            return Err(Error::Format {
                path: name.to_string(),
                offset: (r * CIFAR_RECORD) as u64,
                reason: format!("label {} outside 0..9", rec[0]),
            });
        }
    }
    Ok(())
}

/// Concatenates in-memory batches in the given order.
pub fn parse_cifar10(batches: &[(&str, &[u8])]) -> Result<Dataset> {
    for (name, bytes) in batches {
        check_batch(bytes, name)?;
    }
    let n: usize = batches.iter().map(|(_, b)| b.len() / CIFAR_RECORD).sum();
    let mut y = Matrix::zeros(n, CIFAR_FEATURES);
    let mut labels = Vec::with_capacity(n);
    let mut row = 0;
    for (_, bytes) in batches {
        for rec in bytes.chunks_exact(CIFAR_RECORD) {
            labels.push(rec[0] as usize);
            for (j, &px) in rec[1..].iter().enumerate() {
                y[(row, j)] = px as f64 / 255.0;
            }
            row += 1;
        }
    }
    let name = batches
        .iter()
        .map(|(n, _)| *n)
        .collect::<Vec<_>>()
        .join("+");
    Dataset::new(y, labels, CIFAR_CLASSES, format!("cifar10:{name}"))
}

pub fn load_cifar10<P: AsRef<Path>>(batch_paths: &[P]) -> Result<Dataset> {
    if batch_paths.is_empty() {
        return Err(Error::input("no CIFAR-10 batch files given"));
    }
    let mut owned = Vec::with_capacity(batch_paths.len());
    for p in batch_paths {
        let p = p.as_ref();
        let bytes = std::fs::read(p).map_err(|e| Error::io(p, e))?;
        owned.push((p.display().to_string(), bytes));
    }
    let refs: Vec<(&str, &[u8])> = owned.iter().map(|(n, b)| (n.as_str(), b.as_slice())).collect();
    parse_cifar10(&refs)
}

/// Binary batch for `d` (which must have 3072 features and labels < 10).
pub fn encode_cifar10(d: &Dataset) -> Result<Vec<u8>> {
    if d.n_features() != CIFAR_FEATURES {
        return Err(Error::input(format!(
            "CIFAR-10 records need {CIFAR_FEATURES} features, dataset has {}",
            d.n_features()
        )));
    }
    let mut out = Vec::with_capacity(d.len() * CIFAR_RECORD);
    for i in 0..d.len() {
        let label = d.labels[i];
        if label >= CIFAR_CLASSES {
            return Err(Error::input(format!("label {label} does not fit CIFAR-10")));
        }
        out.push(label as u8);
        out.extend(d.y.row(i).iter().map(|&v| (v * 255.0).round() as u8));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(label: u8, fill: impl Fn(usize) -> u8) -> Vec<u8> {
        let mut r = vec![label];
        r.extend((0..CIFAR_FEATURES).map(fill));
        r
    }

    #[test]
    fn two_record_fixture() {
        let mut bytes = record(3, |j| (j % 256) as u8);
        bytes.extend(record(9, |j| 255 - (j % 256) as u8));
        let d = parse_cifar10(&[("batch", &bytes)]).unwrap();
        assert_eq!(d.labels, vec![3, 9]);
        assert_eq!(d.y[(0, 1)], 1.0 / 255.0);
        // first green pixel of the second image
        assert_eq!(d.y[(1, 1024)], 1.0);
        assert_eq!(encode_cifar10(&d).unwrap(), bytes);
    }

    #[test]
    fn bad_length_names_offset() {
        let mut bytes = record(0, |_| 0);
        bytes.extend_from_slice(&[1, 2, 3]);
        match parse_cifar10(&[("b", &bytes)]) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, CIFAR_RECORD as u64),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn label_ten_is_rejected() {
        let mut bytes = record(1, |_| 0);
        bytes.extend(record(10, |_| 0));
        match parse_cifar10(&[("b", &bytes)]) {
            Err(Error::Format { offset, reason, .. }) => {
                assert_eq!(offset, CIFAR_RECORD as u64);
                assert!(reason.contains("label 10"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn batches_concatenate_in_order() {
        let a = record(1, |_| 0);
        let b = record(2, |_| 0);
        let d = parse_cifar10(&[("a", &a), ("b", &b)]).unwrap();
        assert_eq!(d.labels, vec![1, 2]);
    }
}
