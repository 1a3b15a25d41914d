//! Applies each k-space artifact to a phantom slice, prints how much it
//! changed the image, and replays a policy-driven augmentation from its
//! record. Pass a directory to also write a PNG montage.

use std::path::{Path, PathBuf};

use cmr_pipeline::artifacts::{
    augment_slice, AugmentationPolicy, BiasFieldParams, GammaParams, GhostingParams, MotionParams, TransformParams,
};
use cmr_pipeline::io::Phase;
use cmr_pipeline::phantom::{make_case, PhantomSpec};
use cmr_pipeline::pipeline::{montage, PreviewPanel};
use cmr_pipeline::volume::extract_slices;

fn rms_change(a: &[f64], b: &[f64]) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt()
}

pub fn run_example() -> anyhow::Result<()> {
    gallery(None)
}

fn gallery(png_dir: Option<&Path>) -> anyhow::Result<()> {
    let case = make_case(&PhantomSpec::default(), "P001", 3, Phase::Ed)?;
    let slice = extract_slices(&case.image, &case.case_id).swap_remove(5);

    let transforms = [
        TransformParams::Motion(MotionParams {
            rotations_deg: vec![4.0, -6.0],
            translations_mm: vec![[3.0, 0.0], [-2.0, 5.0]],
            times: vec![0.35, 0.7],
            axis: 1,
        }),
        TransformParams::Ghosting(GhostingParams {
            num_ghosts: 6,
            axis: 1,
            intensity: 0.8,
            restore_center: 0.02,
        }),
        TransformParams::BiasField(BiasFieldParams {
            order: 2,
            coefficients: vec![0.1, 0.3, -0.2, -0.3, 0.1, 0.2],
        }),
        TransformParams::Gamma(GammaParams { log_gamma: 0.25 }),
    ];
    let mut panels = vec![PreviewPanel {
        title: "original".into(),
        slice: slice.clone(),
    }];
    for t in &transforms {
        let out = t.apply(&slice)?;
        println!(
            "{:>10}: rms change {:.2}",
            t.kind().name(),
            rms_change(slice.data(), out.data())
        );
        panels.push(PreviewPanel {
            title: t.kind().name().into(),
            slice: out,
        });
    }

    let policy = AugmentationPolicy::default();
    let (augmented, record) = augment_slice(&slice, &policy, 7)?;
    println!("policy record: {}", serde_json::to_string(&record)?);
    assert_eq!(record.replay(&slice)?, augmented);

    if let Some(dir) = png_dir {
        let path = dir.join("artifact_gallery.png");
        montage(&panels)?.save(&path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    let dir = std::env::args().nth(1).map(PathBuf::from);
    gallery(dir.as_deref())
}
