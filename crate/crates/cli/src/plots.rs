//! Small PNG renderings of evaluation results: a confusion heatmap and a
//! per-class recall-change bar chart. The images carry no text labels; rows
//! and bars follow the class order of the underlying data, which the CSV
//! written next to each image spells out.

use std::path::Path;

use egoav_core::metrics::{ClassDelta, ConfusionMatrix};
use egoav_core::{Error, Result};
use image::{Rgb, RgbImage};

/// Linear interpolation through a dark-blue → red → yellow ramp.
fn heat_color(value: f64) -> Rgb<u8> {
    let stops = [(26u8, 26u8, 64u8), (200, 70, 50), (250, 220, 80)];
    let t = value.clamp(0.0, 1.0) * 2.0;
    let (a, b, frac) = if t <= 1.0 {
        (stops[0], stops[1], t)
    } else {
        (stops[1], stops[2], t - 1.0)
    };
    let lerp = |x: u8, y: u8| (x as f64 + (y as f64 - x as f64) * frac).round() as u8;
    Rgb([lerp(a.0, b.0), lerp(a.1, b.1), lerp(a.2, b.2)])
}

/// Renders the row-normalized confusion matrix as a grid of colored cells.
/// Row i (top to bottom) is true class `matrix.classes()[i]`; column j is the
/// same class list as predictions, left to right.
pub fn confusion_heatmap(matrix: &ConfusionMatrix, path: &Path) -> Result<()> {
    let n = matrix.classes().len();
    if n == 0 {
        return Err(Error::invalid("cannot plot an empty confusion matrix"));
    }
    let cell = (256 / n).clamp(4, 24) as u32;
    let size = cell * n as u32;
    let rows = matrix.row_normalized();
    let mut img = RgbImage::new(size, size);
    for (i, row) in rows.iter().enumerate() {
        for (j, &value) in row.iter().enumerate() {
            let color = heat_color(value);
            for dy in 0..cell {
                for dx in 0..cell {
                    img.put_pixel(j as u32 * cell + dx, i as u32 * cell + dy, color);
                }
            }
        }
    }
    save(img, path)
}

/// Renders recall deltas as horizontal bars around a central zero axis:
/// improvements extend right in green, regressions left in red. Bars follow
/// the order of `deltas`; lengths scale so a ±1 change spans half the width.
pub fn delta_bars(deltas: &[ClassDelta], path: &Path) -> Result<()> {
    const HALF: u32 = 200;
    const BAR: u32 = 12;
    const GAP: u32 = 3;
    let rows = deltas.len().max(1) as u32;
    let width = HALF * 2 + 1;
    let height = rows * (BAR + GAP) + GAP;
    let mut img = RgbImage::from_pixel(width, height, Rgb([245, 245, 245]));
    for y in 0..height {
        img.put_pixel(HALF, y, Rgb([140, 140, 140]));
    }
    for (i, d) in deltas.iter().enumerate() {
        let magnitude = (d.delta.abs().clamp(0.0, 1.0) * HALF as f64).round() as u32;
        let (x0, color) = if d.delta >= 0.0 {
            (HALF + 1, Rgb([60, 160, 75]))
        } else {
            (HALF - magnitude, Rgb([200, 60, 50]))
        };
        let y0 = GAP + i as u32 * (BAR + GAP);
        for dy in 0..BAR {
            for dx in 0..magnitude {
                img.put_pixel(x0 + dx, y0 + dy, color);
            }
        }
    }
    save(img, path)
}

fn save(img: RgbImage, path: &Path) -> Result<()> {
    img.save(path)
        .map_err(|e| Error::Io(std::io::Error::other(e)))
}
