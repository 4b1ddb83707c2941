mod common;

use common::{cifar_fixture, mnist_fixture};
use hybrid_rfm::data::{
    encode_cifar10, encode_idx_images, encode_idx_labels, load_cifar10, load_mnist, parse_cifar10,
    parse_mnist, CIFAR_RECORD,
};
use hybrid_rfm::Error;

fn offset_of(e: Error) -> (String, u64) {
    match e {
        Error::Format { path, offset, .. } => (path, offset),
        other => panic!("expected a format error, got {other}"),
    }
}

#[test]
fn mnist_fixture_decodes_and_round_trips() {
    let (img, lab) = mnist_fixture();
    let d = parse_mnist(&img, &lab, "img", "lab").unwrap();
    assert_eq!(d.len(), 3);
    assert_eq!(d.n_features(), 4);
    assert_eq!(d.labels, vec![7, 0, 9]);
    assert_eq!(d.y[(0, 1)], 1.0);
    assert_eq!(d.y[(0, 2)], 128.0 / 255.0);
    assert_eq!(d.c[(0, 7)], 1.0);
    assert_eq!(encode_idx_images(&d, 2, 2).unwrap(), img);
    assert_eq!(encode_idx_labels(&d), lab);
}

#[test]
fn mnist_bad_magic_named_at_zero() {
    let (mut img, lab) = mnist_fixture();
    img[3] = 0x01;
    let (path, off) = offset_of(parse_mnist(&img, &lab, "img", "lab").unwrap_err());
    assert_eq!((path.as_str(), off), ("img", 0));
    let (img, mut lab) = mnist_fixture();
    lab[2] = 0x09;
    let (path, off) = offset_of(parse_mnist(&img, &lab, "img", "lab").unwrap_err());
    assert_eq!((path.as_str(), off), ("lab", 0));
}

#[test]
fn mnist_length_errors_named() {
    let (img, lab) = mnist_fixture();
    let short = &img[..img.len() - 1];
    assert_eq!(offset_of(parse_mnist(short, &lab, "img", "lab").unwrap_err()).1, 27);
    let mut long = img.clone();
    long.push(0);
    assert_eq!(offset_of(parse_mnist(&long, &lab, "img", "lab").unwrap_err()).1, 28);
    assert_eq!(offset_of(parse_mnist(&img[..6], &lab, "img", "lab").unwrap_err()).1, 4);

    let mut bad_count = lab.clone();
    bad_count[7] = 2;
    assert_eq!(offset_of(parse_mnist(&img, &bad_count, "img", "lab").unwrap_err()).1, 4);
    let mut bad_label = lab;
    bad_label[9] = 10;
    assert_eq!(offset_of(parse_mnist(&img, &bad_label, "img", "lab").unwrap_err()).1, 9);
}

#[test]
fn cifar_fixture_decodes_and_round_trips() {
    let a = cifar_fixture(&[3, 9]);
    let b = cifar_fixture(&[0]);
    let d = parse_cifar10(&[("a", &a), ("b", &b)]).unwrap();
    assert_eq!(d.len(), 3);
    assert_eq!(d.labels, vec![3, 9, 0]);
    assert_eq!(d.y[(1, 0)], 31.0 / 255.0);
    let mut both = a.clone();
    both.extend_from_slice(&b);
    assert_eq!(encode_cifar10(&d).unwrap(), both);
}

#[test]
fn cifar_malformed_records_named() {
    let a = cifar_fixture(&[1, 2]);
    let (path, off) = offset_of(parse_cifar10(&[("a", &a[..a.len() - 5])]).unwrap_err());
    assert_eq!((path.as_str(), off), ("a", CIFAR_RECORD as u64));
    let bad = cifar_fixture(&[1, 11]);
    assert_eq!(offset_of(parse_cifar10(&[("x", &bad)]).unwrap_err()).1, CIFAR_RECORD as u64);
}

#[test]
fn loaders_read_files_and_name_missing_paths() {
    let dir = tempfile::tempdir().unwrap();
    let (img, lab) = mnist_fixture();
    let ip = dir.path().join("images");
    let lp = dir.path().join("labels");
    std::fs::write(&ip, &img).unwrap();
    std::fs::write(&lp, &lab).unwrap();
    assert_eq!(load_mnist(&ip, &lp).unwrap().labels, vec![7, 0, 9]);

    let cp = dir.path().join("batch.bin");
    std::fs::write(&cp, cifar_fixture(&[4])).unwrap();
    assert_eq!(load_cifar10(&[&cp]).unwrap().labels, vec![4]);

    let missing = dir.path().join("nope");
    let err = load_mnist(&missing, &lp).unwrap_err();
    assert!(err.to_string().contains("nope"), "{err}");
}
