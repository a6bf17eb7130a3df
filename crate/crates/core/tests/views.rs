use wsaug::fit::{make_views, synth_signal, FitConfig, SignalKind};
use wsaug::NetworkSpec;

#[test]
fn ten_views_fit_one_image_with_distant_weights() {
    let task = synth_signal(&SignalKind::Checkerboard { size: 32, cells: 3, offset: [0.0, 0.0] }).unwrap();
    let spec = NetworkSpec::siren(vec![2, 32, 32, 1]).unwrap();
    let views = make_views(&spec, &task, &FitConfig::image_default(), 10, 40).unwrap();
    assert_eq!(views.len(), 10);
    for (_, r) in &views {
        assert!(r.final_psnr.unwrap() >= 40.0, "{r:?}");
    }

    let recon: Vec<Vec<f64>> = views
        .iter()
        .map(|(e, _)| e.forward_batch_f64(task.inputs()).unwrap())
        .collect();
    for i in 0..views.len() {
        for j in i + 1..views.len() {
            let weights = views[i].0.flat_distance(&views[j].0).unwrap();
            let outputs = recon[i].iter().zip(&recon[j]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            assert!(weights > 0.0);
            assert!(weights >= 10.0 * outputs, "views {i},{j}: weights {weights}, outputs {outputs}");
        }
    }
}
