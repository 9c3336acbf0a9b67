use std::fs;

use proptest::prelude::*;
use smac::io::{load_cloud, load_cloud_with, save_cloud, write_ply, CloudFormat};
use smac::smac_core::PointCloud4D;

fn random_cloud(seed: u64, n: usize) -> PointCloud4D {
    use rand::{Rng, SeedableRng};
    let mut g = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let positions = (0..n).map(|_| [g.random_range(-3.0..3.0), g.random_range(-1e-3..1e-3), g.random::<f64>() * 1e6]).collect();
    let color = (0..n).map(|_| g.random_range(-10.0..10.0)).collect();
    PointCloud4D::new("r", positions, color).unwrap()
}

fn max_diff(a: &PointCloud4D, b: &PointCloud4D) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut d: f64 = 0.0;
    for i in 0..a.len() {
        for k in 0..3 {
            d = d.max((a.positions()[i][k] - b.positions()[i][k]).abs());
        }
        d = d.max((a.color()[i] - b.color()[i]).abs());
    }
    d
}

#[test]
fn csv_and_ply_round_trip_n100() {
    let dir = tempfile::tempdir().unwrap();
    let cloud = random_cloud(1, 100);
    for (name, fmt) in [("a.csv", CloudFormat::Csv), ("a.ply", CloudFormat::Ply)] {
        let p = dir.path().join(name);
        save_cloud(&cloud, &p, fmt).unwrap();
        let back = load_cloud(&p, fmt).unwrap();
        assert!(max_diff(&cloud, &back) <= 1e-12, "{name}");
    }
}

#[test]
fn csv_without_header_and_with_comments() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.csv");
    fs::write(&p, "# scan\n0,0,0,1\n1, 0, 0, 2\n\n0,1,0,3\n").unwrap();
    let c = load_cloud(&p, CloudFormat::Csv).unwrap();
    assert_eq!(c.len(), 3);
    assert_eq!(c.color(), &[1.0, 2.0, 3.0]);
}

#[test]
fn csv_errors_carry_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.csv");
    fs::write(&p, "x,y,z,c\n0,0,0,1\n1,0,zero,2\n").unwrap();
    let msg = load_cloud(&p, CloudFormat::Csv).unwrap_err().to_string();
    assert!(msg.contains("line 3"), "{msg}");
}

#[test]
fn duplicates_are_merged_by_averaging_color() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("d.csv");
    fs::write(&p, "0,0,0,1\n1,0,0,2\n0,0,0,3\n0,1,0,4\n").unwrap();
    let c = load_cloud(&p, CloudFormat::Csv).unwrap();
    assert_eq!(c.len(), 3);
    let i = c.positions().iter().position(|q| *q == [0.0, 0.0, 0.0]).unwrap();
    assert_eq!(c.color()[i], 2.0);
}

#[test]
fn ascii_ply_with_faces_floats_and_custom_property() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("m.ply");
    fs::write(
        &p,
        "ply\nformat ascii 1.0\ncomment test\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\n\
         property uchar red\nproperty float intensity\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n\
         0 0 0 255 0.5\n1 0 0 0 1.5\n0 1 0 7 2.5\n3 0 1 2\n",
    )
    .unwrap();
    let c = load_cloud_with(&p, CloudFormat::Ply, "intensity").unwrap();
    assert_eq!(c.color(), &[0.5, 1.5, 2.5]);
    // default property name is absent here
    assert!(load_cloud(&p, CloudFormat::Ply).unwrap_err().to_string().contains("quality"));
}

#[test]
fn binary_ply_with_extra_attribute_reads_back() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("b.ply");
    let cloud = random_cloud(2, 50);
    let mask: Vec<f64> = (0..50).map(|i| (i % 2) as f64).collect();
    write_ply(&cloud, &p, &[("mask", &mask)]).unwrap();
    assert!(max_diff(&cloud, &load_cloud(&p, CloudFormat::Ply).unwrap()) == 0.0);
    let as_mask = load_cloud_with(&p, CloudFormat::Ply, "mask").unwrap();
    assert_eq!(as_mask.color(), mask.as_slice());
}

#[test]
fn big_endian_ply_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("be.ply");
    fs::write(&p, "ply\nformat binary_big_endian 1.0\nelement vertex 0\nend_header\n").unwrap();
    assert!(load_cloud(&p, CloudFormat::Ply).unwrap_err().to_string().contains("unsupported format"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn csv_round_trip_is_bit_exact(seed in any::<u64>(), n in 1usize..40) {
        let dir = tempfile::tempdir().unwrap();
        let cloud = random_cloud(seed, n);
        let p = dir.path().join("p.csv");
        save_cloud(&cloud, &p, CloudFormat::Csv).unwrap();
        let back = load_cloud(&p, CloudFormat::Csv).unwrap();
        prop_assert_eq!(back.positions(), cloud.positions());
        prop_assert_eq!(back.color(), cloud.color());
    }
}
