//! Scores a deliberately eroded and shifted prediction against phantom
//! ground truth and prints the per-structure table.

use cmr_pipeline::io::Phase;
use cmr_pipeline::metrics::{aggregate, evaluate_case, CohortSummary};
use cmr_pipeline::phantom::{make_case, PhantomSpec};
use cmr_pipeline::LabelVolume;

fn shifted(v: &LabelVolume, dx: usize) -> LabelVolume {
    let [nx, _, _] = v.shape();
    let data = v
        .data()
        .iter()
        .enumerate()
        .map(|(idx, _)| if idx % nx >= dx { v.data()[idx - dx] } else { 0 })
        .collect();
    v.with_data(data).expect("same grid")
}

pub fn run_example() -> anyhow::Result<()> {
    let spec = PhantomSpec {
        shape: [100, 100, 4],
        spacing: [1.5, 1.5, 8.0],
        ..Default::default()
    };
    let mut reports = Vec::new();
    for (n, phase) in [Phase::Ed, Phase::Es].into_iter().enumerate() {
        let case = make_case(&spec, "P001", 1, phase)?;
        let pred = shifted(&case.labels, n + 1);
        reports.push(evaluate_case(&case.case_id, &pred, &case.labels, &spec.labels)?);
    }
    for r in &reports {
        println!("{}: mean dice {:.3}", r.case_id, r.mean_dice);
    }
    let summary = aggregate(&reports)?;
    print!("{}", CohortSummary::table(&[("shifted", &summary)]));
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
