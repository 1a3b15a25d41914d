//! Independent reference implementations shared by the integration tests.
//! Nothing here calls into the library's numerical code.

#![allow(dead_code)]

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Centered, orthonormal 2-D DFT by direct summation; the output index
/// `u` holds frequency `u - nx/2`. Layout `[nx, ny]` with axis 0 contiguous.
pub fn dft2_centered(data: &[Complex64], shape: [usize; 2], inverse: bool) -> Vec<Complex64> {
    let [nx, ny] = shape;
    let sign = if inverse { 1.0 } else { -1.0 };
    let norm = 1.0 / ((nx * ny) as f64).sqrt();
    let (cx, cy) = ((nx / 2) as f64, (ny / 2) as f64);
    let mut out = vec![Complex64::default(); nx * ny];
    for v in 0..ny {
        for u in 0..nx {
            let mut acc = Complex64::default();
            for j in 0..ny {
                for i in 0..nx {
                    let (a, b, x, y) = if inverse {
                        (i as f64 - cx, j as f64 - cy, u as f64, v as f64)
                    } else {
                        (u as f64 - cx, v as f64 - cy, i as f64, j as f64)
                    };
                    let phase = sign * 2.0 * PI * (a * x / nx as f64 + b * y / ny as f64);
                    acc += data[i + nx * j] * Complex64::from_polar(1.0, phase);
                }
            }
            out[u + nx * v] = acc * norm;
        }
    }
    out
}

pub fn to_complex(v: &[f64]) -> Vec<Complex64> {
    v.iter().map(|&x| Complex64::new(x, 0.0)).collect()
}

/// Percentile by linear interpolation between closest ranks.
pub fn percentile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rank = q / 100.0 * (v.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (rank - lo as f64)
}

/// Foreground voxels with a background (or out-of-grid) face neighbour.
pub fn brute_surface(mask: &[bool], shape: [usize; 3]) -> Vec<[usize; 3]> {
    let [nx, ny, nz] = shape;
    let inside = |i: i64, j: i64, k: i64| {
        i >= 0
            && j >= 0
            && k >= 0
            && (i as usize) < nx
            && (j as usize) < ny
            && (k as usize) < nz
            && mask[i as usize + nx * (j as usize + ny * k as usize)]
    };
    let mut out = Vec::new();
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let (a, b, c) = (i as i64, j as i64, k as i64);
                if !inside(a, b, c) {
                    continue;
                }
                let n6 = [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)];
                if n6.iter().any(|&(di, dj, dk)| !inside(a + di, b + dj, c + dk)) {
                    out.push([i, j, k]);
                }
            }
        }
    }
    out
}

/// Every directed distance from `from`'s surface to the nearest point of
/// `to`'s surface, by checking all pairs.
pub fn brute_directed(from: &[[usize; 3]], to: &[[usize; 3]], spacing: [f64; 3]) -> Vec<f64> {
    from.iter()
        .map(|p| {
            to.iter()
                .map(|q| {
                    let d: Vec<f64> = (0..3).map(|a| (p[a] as f64 - q[a] as f64) * spacing[a]).collect();
                    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
                })
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

pub fn brute_hd95(a: &[bool], b: &[bool], shape: [usize; 3], spacing: [f64; 3]) -> Option<f64> {
    let (sa, sb) = (brute_surface(a, shape), brute_surface(b, shape));
    if sa.is_empty() || sb.is_empty() {
        return None;
    }
    let ab = brute_directed(&sa, &sb, spacing);
    let ba = brute_directed(&sb, &sa, spacing);
    Some(percentile(&ab, 95.0).max(percentile(&ba, 95.0)))
}

pub fn brute_dice(a: &[bool], b: &[bool]) -> f64 {
    let na = a.iter().filter(|&&x| x).count();
    let nb = b.iter().filter(|&&x| x).count();
    let both = a.iter().zip(b).filter(|(&x, &y)| x && y).count();
    if na + nb == 0 {
        1.0
    } else {
        (2 * both) as f64 / (na + nb) as f64
    }
}

/// A random mask: either speckle with density `p` or a random box, so both
/// scattered and compact shapes are covered.
pub fn random_mask<R: Rng>(rng: &mut R, shape: [usize; 3]) -> Vec<bool> {
    let n = shape.iter().product();
    if rng.random_bool(0.5) {
        let p = rng.random_range(0.05..0.6);
        (0..n).map(|_| rng.random_bool(p)).collect()
    } else {
        let lo: Vec<usize> = shape.iter().map(|&s| rng.random_range(0..s)).collect();
        let hi: Vec<usize> = shape
            .iter()
            .zip(&lo)
            .map(|(&s, &l)| rng.random_range(l..s) + 1)
            .collect();
        (0..n)
            .map(|idx| {
                let c = [idx % shape[0], (idx / shape[0]) % shape[1], idx / (shape[0] * shape[1])];
                (0..3).all(|a| c[a] >= lo[a] && c[a] < hi[a])
            })
            .collect()
    }
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
