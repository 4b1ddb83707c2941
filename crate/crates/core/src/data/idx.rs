//! MNIST IDX files: big-endian `u32` magic and dimensions followed by
//! unsigned bytes.

use std::path::Path;

use super::Dataset;
use crate::error::{Error, Result};
use crate::numerics::Matrix;

pub const IDX_IMAGES: u32 = 0x0000_0803;
pub const IDX_LABELS: u32 = 0x0000_0801;
const MNIST_CLASSES: usize = 10;

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a str,
}

impl<'a> Reader<'a> {
    fn fail(&self, offset: usize, reason: impl Into<String>) -> Error {
        Error::Format {
            path: self.path.to_string(),
            offset: offset as u64,
            reason: reason.into(),
        }
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let end = self.pos + 4;
        let chunk = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| self.fail(self.pos, format!("truncated while reading {what}")))?;
        self.pos = end;
        Ok(u32::from_be_bytes(chunk.try_into().expect("4 bytes")))
    }

    fn magic(&mut self, expected: u32) -> Result<()> {
        let got = self.u32("magic number")?;
        if got != expected {
            return Err(self.fail(0, format!("magic 0x{got:08x}, expected 0x{expected:08x}")));
        }
        Ok(())
    }

    fn payload(&mut self, len: usize) -> Result<&'a [u8]> {
        let have = self.bytes.len() - self.pos;
        if have < len {
            return Err(self.fail(
                self.bytes.len(),
                format!("truncated payload: expected {len} bytes after the header, found {have}"),
            ));
        }
        if have > len {
            return Err(self.fail(self.pos + len, "trailing bytes after the payload"));
        }
        let out = &self.bytes[self.pos..self.pos + len];
        self.pos += len;
        Ok(out)
    }
}

/// Decodes an IDX image file and its label file from memory.
pub fn parse_mnist(
    images: &[u8],
    labels: &[u8],
    images_name: &str,
    labels_name: &str,
) -> Result<Dataset> {
    let mut img = Reader {
        bytes: images,
        pos: 0,
        path: images_name,
    };
    img.magic(IDX_IMAGES)?;
    let count = img.u32("image count")? as usize;
    let rows = img.u32("row count")? as usize;
    let cols = img.u32("column count")? as usize;
    let pixels = img.payload(count * rows * cols)?;

    let mut lab = Reader {
        bytes: labels,
        pos: 0,
        path: labels_name,
    };
    lab.magic(IDX_LABELS)?;
    let label_count = lab.u32("label count")? as usize;
    if label_count != count {
        return Err(lab.fail(
            4,
            format!("label count {label_count} does not match image count {count}"),
        ));
    }
    let raw_labels = lab.payload(count)?;
    if let Some(pos) = raw_labels.iter().position(|&l| l as usize >= MNIST_CLASSES) {
        return Err(lab.fail(8 + pos, format!("label {} outside 0..9", raw_labels[pos])));
    }

    let n_f = rows * cols;
    let y = Matrix::from_fn(count, n_f, |i, j| pixels[i * n_f + j] as f64 / 255.0);
    let labels = raw_labels.iter().map(|&l| l as usize).collect();
    Dataset::new(y, labels, MNIST_CLASSES, format!("mnist:{images_name}"))
}

pub fn load_mnist(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<Dataset> {
    let (ip, lp) = (images_path.as_ref(), labels_path.as_ref());
    let images = std::fs::read(ip).map_err(|e| Error::io(ip, e))?;
    let labels = std::fs::read(lp).map_err(|e| Error::io(lp, e))?;
    parse_mnist(
        &images,
        &labels,
        &ip.display().to_string(),
        &lp.display().to_string(),
    )
}

/// IDX image file for `d`, pixels rounded back to bytes.
pub fn encode_idx_images(d: &Dataset, rows: usize, cols: usize) -> Result<Vec<u8>> {
    if rows * cols != d.n_features() {
        return Err(Error::input(format!(
            "{rows}x{cols} images need {} features, dataset has {}",
            rows * cols,
            d.n_features()
        )));
    }
    let mut out = Vec::with_capacity(16 + d.len() * rows * cols);
    for v in [IDX_IMAGES, d.len() as u32, rows as u32, cols as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    for i in 0..d.len() {
        out.extend(d.y.row(i).iter().map(|&v| (v * 255.0).round() as u8));
    }
    Ok(out)
}

pub fn encode_idx_labels(d: &Dataset) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + d.len());
    out.extend_from_slice(&IDX_LABELS.to_be_bytes());
    out.extend_from_slice(&(d.len() as u32).to_be_bytes());
    out.extend(d.labels.iter().map(|&l| l as u8));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header(magic: u32, dims: &[u32]) -> Vec<u8> {
        let mut v = magic.to_be_bytes().to_vec();
        for d in dims {
            v.extend_from_slice(&d.to_be_bytes());
        }
        v
    }

    #[test]
    fn two_image_fixture() {
        let mut images = header(IDX_IMAGES, &[2, 2, 2]);
        images.extend_from_slice(&[0, 255, 51, 102, 1, 2, 3, 4]);
        let mut labels = header(IDX_LABELS, &[2]);
        labels.extend_from_slice(&[7, 3]);
        let d = parse_mnist(&images, &labels, "img", "lab").unwrap();
        assert_eq!(d.labels, vec![7, 3]);
        assert_eq!(d.y.row(0).iter().copied().collect::<Vec<_>>(), vec![0.0, 1.0, 0.2, 0.4]);
        assert_eq!(d.y[(1, 3)], 4.0 / 255.0);
        assert_eq!(encode_idx_images(&d, 2, 2).unwrap(), images);
        assert_eq!(encode_idx_labels(&d), labels);
    }

    #[test]
    fn label_file_with_image_magic_is_rejected() {
        let mut images = header(IDX_IMAGES, &[1, 1, 1]);
        images.push(9);
        let mut labels = header(IDX_IMAGES, &[1]);
        labels.push(0);
        match parse_mnist(&images, &labels, "img", "lab") {
            Err(Error::Format { path, offset, .. }) => {
                assert_eq!(path, "lab");
                assert_eq!(offset, 0);
            }
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn truncated_and_mismatched() {
        let mut images = header(IDX_IMAGES, &[2, 2, 2]);
        images.extend_from_slice(&[0; 7]);
        let mut labels = header(IDX_LABELS, &[2]);
        labels.extend_from_slice(&[0, 1]);
        match parse_mnist(&images, &labels, "img", "lab") {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 23),
            other => panic!("{other:?}"),
        }
        images.push(0);
        let mut short = header(IDX_LABELS, &[3]);
        short.extend_from_slice(&[0, 1, 2]);
        match parse_mnist(&images, &short, "img", "lab") {
            Err(Error::Format { offset, reason, .. }) => {
                assert_eq!(offset, 4);
                assert!(reason.contains("does not match"));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_mnist(&images[..6], &labels, "img", "lab"),
            Err(Error::Format { offset: 4, .. })
        ));
    }
}
