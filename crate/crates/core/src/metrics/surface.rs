//! Boundary extraction and surface distances.
//!
//! A surface voxel is a foreground voxel with at least one of its six face
//! neighbours in the background; positions outside the grid count as
//! background. Distances between surfaces come from an exact squared
//! Euclidean distance transform (lower envelope of parabolas, one pass per
//! axis) with anisotropic spacing.

use crate::volume::Grid;

/// World-mm centers of the boundary voxels of a mask.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfacePointSet {
    pub points: Vec<[f64; 3]>,
}

impl SurfacePointSet {
    pub fn from_mask(mask: &[bool], grid: &Grid) -> Self {
        let points = surface_voxels(mask, grid.shape())
            .into_iter()
            .map(|[i, j, k]| grid.world([i as f64, j as f64, k as f64]))
            .collect();
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Boolean surface mask.
pub fn surface_mask(mask: &[bool], shape: [usize; 3]) -> Vec<bool> {
    let [nx, ny, nz] = shape;
    let at = |i: usize, j: usize, k: usize| mask[i + nx * (j + ny * k)];
    let mut out = vec![false; mask.len()];
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let idx = i + nx * (j + ny * k);
                if !mask[idx] {
                    continue;
                }
                out[idx] = i == 0
                    || i + 1 == nx
                    || j == 0
                    || j + 1 == ny
                    || k == 0
                    || k + 1 == nz
                    || !at(i - 1, j, k)
                    || !at(i + 1, j, k)
                    || !at(i, j - 1, k)
                    || !at(i, j + 1, k)
                    || !at(i, j, k - 1)
                    || !at(i, j, k + 1);
            }
        }
    }
    out
}

/// Voxel indices of the surface, in storage order.
pub fn surface_voxels(mask: &[bool], shape: [usize; 3]) -> Vec<[usize; 3]> {
    let [nx, ny, _] = shape;
    surface_mask(mask, shape)
        .iter()
        .enumerate()
        .filter(|(_, &s)| s)
        .map(|(idx, _)| [idx % nx, (idx / nx) % ny, idx / (nx * ny)])
        .collect()
}

/// 1-D squared distance transform of `f` sampled at positions `p * step`.
fn edt_1d(f: &[f64], step: f64, out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let pos = |q: usize| q as f64 * step;
    let mut k = 0usize;
    // first finite sample seeds the envelope
    let Some(first) = f.iter().position(|x| x.is_finite()) else {
        out.fill(f64::INFINITY);
        return;
    };
    v[0] = first;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in first + 1..n {
        if !f[q].is_finite() {
            continue;
        }
        loop {
            let r = v[k];
            let s = ((f[q] + pos(q) * pos(q)) - (f[r] + pos(r) * pos(r))) / (2.0 * (pos(q) - pos(r)));
            // z[0] is -inf, so this never pops past the first parabola
            if s <= z[k] {
                k -= 1;
                continue;
            }
            k += 1;
            v[k] = q;
            z[k] = s;
            z[k + 1] = f64::INFINITY;
            break;
        }
    }
    k = 0;
    for (p, o) in out.iter_mut().enumerate() {
        while z[k + 1] < pos(p) {
            k += 1;
        }
        let d = (p as f64 - v[k] as f64) * step;
        *o = d * d + f[v[k]];
    }
}

/// Squared distance (mm^2) from every voxel to the nearest `true` voxel of
/// `features`. All-`false` input yields infinity everywhere.
pub fn squared_distance_transform(features: &[bool], shape: [usize; 3], spacing: [f64; 3]) -> Vec<f64> {
    let mut dist: Vec<f64> = features.iter().map(|&b| if b { 0.0 } else { f64::INFINITY }).collect();
    let strides = [1, shape[0], shape[0] * shape[1]];
    let max_n = *shape.iter().max().unwrap();
    let (mut line, mut out) = (vec![0.0; max_n], vec![0.0; max_n]);
    let (mut v, mut z) = (vec![0usize; max_n], vec![0.0; max_n + 1]);
    for axis in 0..3 {
        let n = shape[axis];
        let stride = strides[axis];
        let others: Vec<usize> = (0..3).filter(|&a| a != axis).collect();
        for b in 0..shape[others[1]] {
            for a in 0..shape[others[0]] {
                let base = a * strides[others[0]] + b * strides[others[1]];
                for p in 0..n {
                    line[p] = dist[base + p * stride];
                }
                edt_1d(&line[..n], spacing[axis], &mut out[..n], &mut v, &mut z);
                for p in 0..n {
                    dist[base + p * stride] = out[p];
                }
            }
        }
    }
    dist
}

/// Distance (mm) from each surface voxel of `from` to the surface of `to`,
/// in storage order of `from`'s surface.
pub fn directed_surface_distances(from: &[bool], to: &[bool], shape: [usize; 3], spacing: [f64; 3]) -> Vec<f64> {
    let to_surface = surface_mask(to, shape);
    if !to_surface.contains(&true) {
        return Vec::new();
    }
    let dt = squared_distance_transform(&to_surface, shape, spacing);
    surface_mask(from, shape)
        .iter()
        .zip(&dt)
        .filter(|(&s, _)| s)
        .map(|(_, &d2)| d2.sqrt())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solid_cube_surface() {
        let shape = [5, 5, 5];
        let mask = vec![true; 125];
        let s = surface_voxels(&mask, shape);
        assert_eq!(s.len(), 125 - 27);
        let mut inner = vec![false; 125];
        for k in 1..4 {
            for j in 1..4 {
                for i in 1..4 {
                    inner[i + 5 * (j + 5 * k)] = true;
                }
            }
        }
        // 3x3x3 block inside the grid: only its center is interior
        assert_eq!(surface_voxels(&inner, shape).len(), 26);
    }

    #[test]
    fn edt_single_point_anisotropic() {
        let shape = [4, 3, 2];
        let mut f = vec![false; 24];
        f[0] = true;
        let d = squared_distance_transform(&f, shape, [1.0, 2.0, 4.0]);
        // voxel (3, 2, 1): 3^2 + 4^2 + 4^2
        assert_eq!(d[3 + 4 * (2 + 3)], 41.0);
    }

    #[test]
    fn edt_empty_is_infinite() {
        let d = squared_distance_transform(&[false; 8], [2, 2, 2], [1.0; 3]);
        assert!(d.iter().all(|x| x.is_infinite()));
    }

    #[test]
    fn edt_matches_brute_force_on_line() {
        let f = [false, true, false, false, false, true, false];
        let mut out = [0.0; 7];
        let fv: Vec<f64> = f.iter().map(|&b| if b { 0.0 } else { f64::INFINITY }).collect();
        let (mut v, mut z) = (vec![0; 7], vec![0.0; 8]);
        edt_1d(&fv, 1.5, &mut out, &mut v, &mut z);
        let expect: Vec<f64> = (0..7)
            .map(|p: i32| {
                [1, 5]
                    .iter()
                    .map(|&q: &i32| ((p - q) as f64 * 1.5).powi(2))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        assert_eq!(out.to_vec(), expect);
    }
}
