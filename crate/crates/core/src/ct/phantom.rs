//! Synthetic ground-truth images on the [-1, 1]^2 grid.

use crate::distributions::RngStream;
use crate::error::{Error, Result};
use crate::grid::ImageGrid;

/// One ellipse of the Shepp-Logan table: center, semi-axes, rotation
/// (degrees, counter-clockwise), additive intensity.
struct Ellipse {
    x0: f64,
    y0: f64,
    a: f64,
    b: f64,
    phi_deg: f64,
    intensity: f64,
}

/// The modified (high-contrast) ten-ellipse Shepp-Logan table.
const SHEPP_LOGAN: [Ellipse; 10] = [
    Ellipse { x0: 0.0, y0: 0.0, a: 0.69, b: 0.92, phi_deg: 0.0, intensity: 1.0 },
    Ellipse { x0: 0.0, y0: -0.0184, a: 0.6624, b: 0.874, phi_deg: 0.0, intensity: -0.8 },
    Ellipse { x0: 0.22, y0: 0.0, a: 0.11, b: 0.31, phi_deg: -18.0, intensity: -0.2 },
    Ellipse { x0: -0.22, y0: 0.0, a: 0.16, b: 0.41, phi_deg: 18.0, intensity: -0.2 },
    Ellipse { x0: 0.0, y0: 0.35, a: 0.21, b: 0.25, phi_deg: 0.0, intensity: 0.1 },
    Ellipse { x0: 0.0, y0: 0.1, a: 0.046, b: 0.046, phi_deg: 0.0, intensity: 0.1 },
    Ellipse { x0: 0.0, y0: -0.1, a: 0.046, b: 0.046, phi_deg: 0.0, intensity: 0.1 },
    Ellipse { x0: -0.08, y0: -0.605, a: 0.046, b: 0.023, phi_deg: 0.0, intensity: 0.1 },
    Ellipse { x0: 0.0, y0: -0.605, a: 0.023, b: 0.023, phi_deg: 0.0, intensity: 0.1 },
    Ellipse { x0: 0.06, y0: -0.605, a: 0.023, b: 0.046, phi_deg: 0.0, intensity: 0.1 },
];

/// Pixel-center coordinate of column j (x) or, mirrored, row i (y) on a
/// d-pixel axis over [-1, 1]. Row 0 is the top of the image (y = +1 side).
fn axis_center(idx: usize, d: usize) -> f64 {
    -1.0 + (idx as f64 + 0.5) * 2.0 / d as f64
}

fn check_side(d: usize) -> Result<()> {
    if d < 8 {
        return Err(Error::domain(format!("phantoms need d >= 8, got {d}")));
    }
    Ok(())
}

/// Rasterize the modified Shepp-Logan phantom: each pixel sums the
/// intensities of the ellipses containing its center.
pub fn phantom_shepp_logan(d: usize) -> Result<ImageGrid> {
    check_side(d)?;
    let mut values = vec![0.0; d * d];
    for row in 0..d {
        let y = -axis_center(row, d);
        for col in 0..d {
            let x = axis_center(col, d);
            let mut v = 0.0;
            for e in &SHEPP_LOGAN {
                let phi = e.phi_deg.to_radians();
                let (sin, cos) = phi.sin_cos();
                let dx = x - e.x0;
                let dy = y - e.y0;
                let xr = dx * cos + dy * sin;
                let yr = -dx * sin + dy * cos;
                if (xr / e.a).powi(2) + (yr / e.b).powi(2) <= 1.0 {
                    v += e.intensity;
                }
            }
            // The table sums to values in [0, 1] exactly; clip the ~1e-16
            // float dust so overlapping regions stay in range.
            values[row * d + col] = v.clamp(0.0, 1.0);
        }
    }
    ImageGrid::new(d, values)
}

/// Seeded Voronoi "grains" phantom: `n_grains` random centers in the unit
/// disk, each cell filled with a random constant intensity in [0, 1], zero
/// outside the disk.
pub fn phantom_grains(d: usize, n_grains: usize, seed: u64) -> Result<ImageGrid> {
    check_side(d)?;
    if n_grains < 1 {
        return Err(Error::domain(format!("need at least one grain, got {n_grains}")));
    }
    let mut rng = RngStream::from_seed(seed);
    let mut centers = Vec::with_capacity(n_grains);
    while centers.len() < n_grains {
        let x = rng.uniform_open01() * 2.0 - 1.0;
        let y = rng.uniform_open01() * 2.0 - 1.0;
        if x * x + y * y <= 1.0 {
            centers.push((x, y));
        }
    }
    let intensities: Vec<f64> = (0..n_grains).map(|_| rng.uniform_open01()).collect();

    let mut values = vec![0.0; d * d];
    for row in 0..d {
        let y = -axis_center(row, d);
        for col in 0..d {
            let x = axis_center(col, d);
            if x * x + y * y > 1.0 {
                continue;
            }
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (k, (cx, cy)) in centers.iter().enumerate() {
                let dist = (x - cx) * (x - cx) + (y - cy) * (y - cy);
                if dist < best_d {
                    best_d = dist;
                    best = k;
                }
            }
            values[row * d + col] = intensities[best];
        }
    }
    ImageGrid::new(d, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shepp_logan_background_and_support() {
        for d in [16, 64] {
            let p = phantom_shepp_logan(d).unwrap();
            // Corners sit outside the unit ball, hence exactly zero.
            assert_eq!(p.get(0, 0), 0.0);
            assert_eq!(p.get(0, d - 1), 0.0);
            assert_eq!(p.get(d - 1, 0), 0.0);
            assert_eq!(p.get(d - 1, d - 1), 0.0);
            assert!(p.values().iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
        assert!(phantom_shepp_logan(4).is_err());
    }

    #[test]
    fn shepp_logan_nonzero_fraction() {
        let p = phantom_shepp_logan(64).unwrap();
        let frac = p.values().iter().filter(|&&v| v != 0.0).count() as f64 / p.len() as f64;
        assert!(
            (0.3..0.6).contains(&frac),
            "nonzero fraction = {frac}"
        );
    }

    #[test]
    fn shepp_logan_multiresolution_consistency() {
        let coarse = phantom_shepp_logan(32).unwrap();
        let fine = phantom_shepp_logan(64).unwrap();
        let mut mad = 0.0;
        for r in 0..32 {
            for c in 0..32 {
                let avg = (fine.get(2 * r, 2 * c)
                    + fine.get(2 * r + 1, 2 * c)
                    + fine.get(2 * r, 2 * c + 1)
                    + fine.get(2 * r + 1, 2 * c + 1))
                    / 4.0;
                mad += (avg - coarse.get(r, c)).abs();
            }
        }
        mad /= 1024.0;
        assert!(mad < 0.05, "mean abs diff = {mad}");
    }

    #[test]
    fn grains_reproducible_and_disk_shaped() {
        let a = phantom_grains(64, 40, 7).unwrap();
        let b = phantom_grains(64, 40, 7).unwrap();
        assert_eq!(a, b);
        let c = phantom_grains(64, 40, 8).unwrap();
        assert_ne!(a, c);
        assert_eq!(a.get(0, 0), 0.0);

        // Distinct positive intensity levels = cells that own pixels.
        let mut levels: Vec<u64> = a
            .values()
            .iter()
            .filter(|&&v| v != 0.0)
            .map(|v| v.to_bits())
            .collect();
        levels.sort();
        levels.dedup();
        assert!(!levels.is_empty() && levels.len() <= 40, "{} levels", levels.len());
    }

    #[test]
    fn single_grain_is_constant_disk() {
        let p = phantom_grains(32, 1, 3).unwrap();
        let inside: Vec<f64> = p.values().iter().copied().filter(|&v| v != 0.0).collect();
        assert!(!inside.is_empty());
        assert!(inside.windows(2).all(|w| w[0] == w[1]));
        assert!(phantom_grains(32, 0, 3).is_err());
    }
}
