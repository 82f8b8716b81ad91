use chartae::cae::{evaluate, loss_mse, train, ChartAutoencoder, TrainConfig};
use chartae::geometry::{build_manifold, make_dataset, EmbeddedManifold, ManifoldParams, NoiseSpec, PairedDataset};

fn unit_sphere() -> EmbeddedManifold {
    EmbeddedManifold::base(build_manifold(&ManifoldParams::Sphere { radius: 1.0 }).unwrap())
}

fn config(batch_size: usize, epochs: usize) -> TrainConfig {
    TrainConfig {
        batch_size,
        learning_rate: 1e-3,
        weight_decay: 0.0,
        epochs,
        steps: None,
        schedule: "constant".into(),
        ..TrainConfig::paper()
    }
}

#[test]
fn smoke_train_cuts_the_loss_tenfold() {
    let ds = make_dataset(&unit_sphere(), 2048, &NoiseSpec::clean(), 1).unwrap();
    let mut model = ChartAutoencoder::new(3, 2, 4, 50, 2).unwrap();
    let initial = loss_mse(&model, &ds.noisy, &ds.clean).unwrap();
    let report = train(&mut model, &ds, &config(512, 200)).unwrap();
    let last = report.final_loss().unwrap();
    assert_eq!(report.history.len(), 200);
    assert!(last < initial / 10.0, "initial {initial} final {last}");
}

/// Points of the upper cap `z > 0.05`.
fn hemisphere(n: usize, seed: u64) -> PairedDataset {
    let ds = make_dataset(&unit_sphere(), n, &NoiseSpec::clean(), seed).unwrap();
    let keep: Vec<usize> = (0..ds.len()).filter(|&i| ds.clean.get(i, 2) > 0.05).collect();
    PairedDataset {
        clean: ds.clean.gather_rows(&keep),
        noisy: ds.noisy.gather_rows(&keep),
        ..ds
    }
}

#[test]
fn single_chart_matches_the_multi_chart_model_on_a_hemisphere() {
    let data = hemisphere(4096, 3);
    let test = hemisphere(2048, 4);
    let mut errors = Vec::new();
    for charts in [1, 4] {
        let mut model = ChartAutoencoder::new(3, 2, charts, 50, 5).unwrap();
        let before = evaluate(&model, &test, false).unwrap().squared_test_error;
        train(&mut model, &data, &config(128, 100)).unwrap();
        let after = evaluate(&model, &test, false).unwrap().squared_test_error;
        assert!(after < before / 100.0, "C = {charts}: {before} -> {after}");
        errors.push(after);
    }
    // one chart has a quarter of the decoder capacity; same order of magnitude
    assert!(errors[0] <= 10.0 * errors[1], "C = 1 {} vs C = 4 {}", errors[0], errors[1]);
}
