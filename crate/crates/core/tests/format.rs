use std::fs;

use lidscope::pointcloud::{load_point_cloud, save_point_cloud, EmbeddingMode};
use lidscope::{PointCloud, Precision, TokenMeta};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_cloud(n: usize, dim: usize, precision: Precision, seed: u64) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<f64> = (0..n * dim).map(|_| rng.random_range(-4.0..4.0)).collect();
    PointCloud::new(dim, data, precision).unwrap()
}

#[test]
fn large_f32_dump_resaves_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a.lide"), tmp.path().join("b.lide"));
    let cloud = random_cloud(60_000, 768, Precision::F32, 1);
    save_point_cloud(&cloud, &a).unwrap();
    let loaded = load_point_cloud(&a).unwrap();
    assert_eq!(loaded.n_points(), 60_000);
    assert_eq!(loaded.dim(), 768);
    save_point_cloud(&loaded, &b).unwrap();
    let (x, y) = (fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(x.len(), 24 + 60_000 * 768 * 4);
    assert!(x == y, "re-saved file differs");
}

#[test]
fn random_cloud_round_trips_in_both_precisions() {
    let tmp = tempfile::tempdir().unwrap();
    for precision in [Precision::F32, Precision::F64] {
        let p = tmp.path().join("c.lide");
        let cloud = random_cloud(1000, 64, precision, 2);
        save_point_cloud(&cloud, &p).unwrap();
        let back = load_point_cloud(&p).unwrap();
        assert_eq!(back.precision(), precision);
        assert_eq!(back.data(), cloud.data());
        assert!(back.meta().is_none());
    }
}

#[test]
fn metadata_round_trips_through_the_sidecar() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("tokens.lide");
    let meta: Vec<TokenMeta> = (0..6)
        .map(|i| TokenMeta {
            seq_id: i / 3,
            pos: i % 3,
            token_text: format!("tok \"{i}\""),
            layer: -1,
            mode: if i % 2 == 0 {
                EmbeddingMode::Regular
            } else {
                EmbeddingMode::Masked
            },
        })
        .collect();
    let cloud = random_cloud(6, 4, Precision::F32, 3)
        .with_meta(meta.clone())
        .unwrap();
    save_point_cloud(&cloud, &p).unwrap();
    let sidecar = fs::read_to_string(tmp.path().join("tokens.meta.jsonl")).unwrap();
    assert_eq!(sidecar.lines().count(), 6);
    assert!(sidecar
        .lines()
        .next()
        .unwrap()
        .contains("\"mode\":\"regular\""));
    let back = load_point_cloud(&p).unwrap();
    assert_eq!(back.meta().unwrap(), &meta[..]);
}
