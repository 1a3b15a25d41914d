//! Fits percentile landmarks on scans with different gains and offsets,
//! then shows that the LV blood pool lands on a similar value in every
//! standardized scan, including one the model never saw.

use cmr_pipeline::io::Phase;
use cmr_pipeline::phantom::{make_case, PhantomSpec};
use cmr_pipeline::standardize::{fit_landmarks, standardize, Foreground, DEFAULT_PERCENTILES};
use cmr_pipeline::{LabelVolume, Volume};

fn mean_in(image: &Volume, labels: &LabelVolume, code: u16) -> f64 {
    let (sum, n) = image
        .data()
        .iter()
        .zip(labels.data())
        .filter(|(_, &l)| l == code)
        .fold((0.0, 0usize), |(s, n), (v, _)| (s + v, n + 1));
    sum / n as f64
}

pub fn run_example() -> anyhow::Result<()> {
    let spec = PhantomSpec {
        shape: [96, 96, 3],
        spacing: [1.6, 1.6, 8.0],
        ..Default::default()
    };
    let gains = [(1.0, 0.0), (2.5, 30.0), (0.6, 100.0), (4.0, 7.0)];
    let mut scans = Vec::new();
    for (n, &(a, b)) in gains.iter().enumerate() {
        let case = make_case(&spec, &format!("S{n}"), 1 + n as u8, Phase::Ed)?;
        scans.push((case.image.map(|v| a * v + b), case.labels));
    }
    let train: Vec<Volume> = scans[..3].iter().map(|(v, _)| v.clone()).collect();
    let model = fit_landmarks(&train, &DEFAULT_PERCENTILES, Foreground::MeanThreshold)?;
    println!(
        "standard scale: {:?}",
        model.standard_scale().iter().map(|v| v.round()).collect::<Vec<_>>()
    );

    for (n, (image, labels)) in scans.iter().enumerate() {
        let lv = spec.labels.lv;
        let out = standardize(image, &model)?;
        println!(
            "scan {n}: LV mean {:8.1} raw -> {:6.1} standardized",
            mean_in(image, labels, lv),
            mean_in(&out, labels, lv)
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
