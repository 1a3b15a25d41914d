use image::GrayImage;

use crate::artifacts::{AugmentationPolicy, TransformKind};
use crate::error::{Error, Result};
use crate::seed::rng_from_seed;
use crate::standardize::percentile_sorted;
use crate::volume::Slice2D;

/// A titled slice for a montage.
#[derive(Debug, Clone)]
pub struct PreviewPanel {
    pub title: String,
    pub slice: Slice2D,
}

/// The original slice followed by one panel per transform kind, each with
/// parameters drawn from `policy` (weights are ignored).
pub(crate) fn transform_panels(slice: &Slice2D, policy: &AugmentationPolicy, seed: u64) -> Result<Vec<PreviewPanel>> {
    let mut rng = rng_from_seed(seed);
    let mut panels = vec![PreviewPanel {
        title: "original".into(),
        slice: slice.clone(),
    }];
    for kind in TransformKind::ALL {
        let params = policy.sample_params(kind, &mut rng)?;
        panels.push(PreviewPanel {
            title: kind.name().into(),
            slice: params.apply(slice)?,
        });
    }
    Ok(panels)
}

/// Side-by-side 8-bit montage. All panels share the 0.5-99.5 percentile
/// window of the first one; a 4-pixel black gap separates panels.
pub fn montage(panels: &[PreviewPanel]) -> Result<GrayImage> {
    let first = panels
        .first()
        .ok_or_else(|| Error::Usage("montage needs at least one panel".into()))?;
    let [w, h] = first.slice.shape();
    if panels.iter().any(|p| p.slice.shape() != [w, h]) {
        return Err(Error::Geometry("montage panels differ in shape".into()));
    }
    let mut sorted = first.slice.data().to_vec();
    sorted.sort_by(f64::total_cmp);
    let lo = percentile_sorted(&sorted, 0.5);
    let hi = percentile_sorted(&sorted, 99.5);
    let scale = if hi > lo { 255.0 / (hi - lo) } else { 0.0 };

    const GAP: usize = 4;
    let total_w = panels.len() * w + (panels.len() - 1) * GAP;
    let mut img = GrayImage::new(total_w as u32, h as u32);
    for (n, p) in panels.iter().enumerate() {
        let x0 = n * (w + GAP);
        for j in 0..h {
            for i in 0..w {
                let v = ((p.slice.get(i, j) - lo) * scale).clamp(0.0, 255.0).round() as u8;
                // image rows run top to bottom; put +j (anterior) at the top
                img.put_pixel((x0 + i) as u32, (h - 1 - j) as u32, image::Luma([v]));
            }
        }
    }
    Ok(img)
}
