//! End-to-end exercise of the batch predictor file protocol: a responder
//! thread reads each request file and answers with a zero-acceleration
//! prediction; the resulting rollout must match the in-process baseline.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Duration;

use ndarray::{s, Array1, Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sphkit::domain::Domain;
use sphkit::rollout::{
    rollout, ConstantVelocityPredictor, FeatureConfig, FileExchangePredictor, HistoryWindow,
    PredictionMode, RolloutOptions,
};
use sphkit::state::ParticleType;

fn responder(dir: std::path::PathBuf, steps: usize, stop: Arc<AtomicBool>) {
    for step in 0..steps {
        let request = FileExchangePredictor::request_path(&dir, step);
        while !request.exists() {
            if stop.load(Ordering::Relaxed) {
                return;
            }
            std::thread::sleep(Duration::from_millis(2));
        }
        // small settle delay so the writer's rename has completed
        std::thread::sleep(Duration::from_millis(5));
        let file = hdf5::File::open(&request).unwrap();
        let positions: Array2<f64> = file.dataset("positions").unwrap().read().unwrap();
        let velocity_history: Array3<f64> =
            file.dataset("velocity_history").unwrap().read().unwrap();
        assert!(file.dataset("senders").is_ok());
        assert!(file.dataset("displacements").is_ok());
        // zero-acceleration response
        let prediction: Array2<f64> = Array2::zeros(positions.raw_dim());
        let _ = velocity_history;
        let response = FileExchangePredictor::response_path(&dir, step);
        let tmp = response.with_extension("h5.tmp");
        {
            let out = hdf5::File::create(&tmp).unwrap();
            out.new_dataset::<f64>()
                .shape(prediction.shape())
                .create("prediction")
                .unwrap()
                .write(&prediction)
                .unwrap();
        }
        std::fs::rename(&tmp, &response).unwrap();
    }
}

#[test]
fn file_exchange_matches_in_process_baseline() {
    let dom = Domain::rect(1.0, 1.0, true, true).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let n = 20;
    let steps = 4;
    let mut all = Array3::zeros((steps + 2, n, 2));
    for i in 0..n {
        for k in 0..2 {
            all[[0, i, k]] = rng.gen::<f64>();
        }
    }
    for f in 1..steps + 2 {
        for i in 0..n {
            for k in 0..2 {
                let v = 0.02 * ((i * 3 + k + f) as f64).sin();
                all[[f, i, k]] = dom.wrap_component(all[[f - 1, i, k]] + v, k);
            }
        }
    }
    let reference = all.slice(s![2.., .., ..]).to_owned();
    let config = FeatureConfig::new(dom, 0.05, vec![ParticleType::Fluid; n]);
    let opts = RolloutOptions::new(Array1::ones(n), 1.0);

    let window = HistoryWindow::new(all.slice(s![0..2, .., ..]).to_owned(), dom).unwrap();
    let (baseline, _) = rollout(
        &mut ConstantVelocityPredictor,
        window.clone(),
        reference.view(),
        &config,
        &opts,
    )
    .unwrap();

    let dir = tempfile::tempdir().unwrap();
    let stop = Arc::new(AtomicBool::new(false));
    let handle = {
        let dir = dir.path().to_path_buf();
        let stop = Arc::clone(&stop);
        std::thread::spawn(move || responder(dir, steps, stop))
    };
    let mut predictor =
        FileExchangePredictor::new(dir.path().to_path_buf(), PredictionMode::Acceleration)
            .with_timeout(Duration::from_secs(30));
    let result = rollout(&mut predictor, window, reference.view(), &config, &opts);
    stop.store(true, Ordering::Relaxed);
    handle.join().unwrap();
    let (via_files, report) = result.unwrap();

    assert_eq!(via_files, baseline);
    assert_eq!(report.steps, steps);
}

#[test]
fn missing_response_times_out_with_step_index() {
    let dom = Domain::rect(1.0, 1.0, true, true).unwrap();
    let n = 3;
    let mut all = Array3::zeros((3, n, 2));
    for f in 0..3 {
        for i in 0..n {
            all[[f, i, 0]] = 0.2 + 0.1 * i as f64;
            all[[f, i, 1]] = 0.3 + 0.01 * f as f64;
        }
    }
    let window = HistoryWindow::new(all.slice(s![0..2, .., ..]).to_owned(), dom).unwrap();
    let reference = all.slice(s![2.., .., ..]);
    let config = FeatureConfig::new(dom, 0.05, vec![ParticleType::Fluid; n]);
    let opts = RolloutOptions::new(Array1::ones(n), 1.0);
    let dir = tempfile::tempdir().unwrap();
    let mut predictor =
        FileExchangePredictor::new(dir.path().to_path_buf(), PredictionMode::Acceleration)
            .with_timeout(Duration::from_millis(100));
    let err = rollout(&mut predictor, window, reference.view(), &config, &opts).unwrap_err();
    match err {
        sphkit::SphError::PredictorProtocol { step, .. } => assert_eq!(step, 0),
        other => panic!("unexpected error {other:?}"),
    }
}
