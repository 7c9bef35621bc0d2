//! Fitness-progression charts: best, mean and worst fitness per generation.

use std::path::Path;

use image::{Rgb, RgbImage};

use crate::analytics::GenerationStats;
use crate::error::{Error, Result};

const BEST: Rgb<u8> = Rgb([0, 150, 0]);
const MEAN: Rgb<u8> = Rgb([0, 60, 220]);
const WORST: Rgb<u8> = Rgb([210, 0, 0]);
const AXIS: Rgb<u8> = Rgb([0, 0, 0]);
const GRID: Rgb<u8> = Rgb([225, 225, 225]);

type Series = [(char, fn(&GenerationStats) -> f64); 3];

const SERIES: Series = [('w', |s| s.worst), ('m', |s| s.mean), ('B', |s| s.best)];

fn value_range(stats: &[GenerationStats]) -> Option<(f64, f64)> {
    let values = stats
        .iter()
        .flat_map(|s| [s.best, s.mean, s.worst])
        .filter(|v| v.is_finite());
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if lo > hi {
        return None;
    }
    if hi - lo < 1e-12 {
        Some((lo - 0.5, hi + 0.5))
    } else {
        Some((lo, hi))
    }
}

/// Character chart; `B` best, `m` mean, `w` worst, later series drawn on top.
pub fn render_ascii(stats: &[GenerationStats], width: usize, height: usize) -> String {
    let Some((lo, hi)) = value_range(stats) else {
        return "no finite fitness values to plot\n".into();
    };
    let (width, height) = (width.max(10), height.max(4));
    let mut canvas = vec![vec![' '; width]; height];
    let n = stats.len();
    for (i, s) in stats.iter().enumerate() {
        let col = if n <= 1 { 0 } else { i * (width - 1) / (n - 1) };
        for (mark, get) in SERIES {
            let v = get(s);
            if !v.is_finite() {
                continue;
            }
            let row = ((hi - v) / (hi - lo) * (height - 1) as f64).round() as usize;
            canvas[row.min(height - 1)][col] = mark;
        }
    }
    let label_w = 11;
    let mut out = String::new();
    for (r, line) in canvas.iter().enumerate() {
        let label = if r == 0 {
            format!("{hi:>10.4}")
        } else if r == height - 1 {
            format!("{lo:>10.4}")
        } else {
            " ".repeat(label_w - 1)
        };
        out.push_str(&label);
        out.push('|');
        out.extend(line.iter());
        out.push('\n');
    }
    out.push_str(&" ".repeat(label_w - 1));
    out.push('+');
    out.push_str(&"-".repeat(width));
    out.push('\n');
    let first = stats.first().map_or(0, |s| s.generation);
    let last = stats.last().map_or(0, |s| s.generation);
    out.push_str(&format!(
        "{}generation {first} .. {last}   B best, m mean, w worst\n",
        " ".repeat(label_w)
    ));
    out
}

fn line(img: &mut RgbImage, (x0, y0): (i64, i64), (x1, y1): (i64, i64), colour: Rgb<u8>) {
    let (dx, dy) = ((x1 - x0).abs(), -(y1 - y0).abs());
    let (sx, sy) = (if x0 < x1 { 1 } else { -1 }, if y0 < y1 { 1 } else { -1 });
    let (mut x, mut y, mut err) = (x0, y0, dx + dy);
    loop {
        for (ox, oy) in [(0, 0), (0, 1), (1, 0)] {
            let (px, py) = (x + ox, y + oy);
            if px >= 0 && py >= 0 && (px as u32) < img.width() && (py as u32) < img.height() {
                img.put_pixel(px as u32, py as u32, colour);
            }
        }
        if x == x1 && y == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

/// Raster chart with light horizontal grid lines at quarter heights.
pub fn render_image(stats: &[GenerationStats], width: u32, height: u32) -> RgbImage {
    let mut img = RgbImage::from_pixel(width, height, Rgb([255, 255, 255]));
    let margin = 30i64;
    let (w, h) = (width as i64 - 2 * margin, height as i64 - 2 * margin);
    if w <= 0 || h <= 0 {
        return img;
    }
    for k in 0..=4 {
        let y = margin + h * k / 4;
        line(&mut img, (margin, y), (margin + w, y), GRID);
    }
    line(&mut img, (margin, margin), (margin, margin + h), AXIS);
    line(&mut img, (margin, margin + h), (margin + w, margin + h), AXIS);
    let Some((lo, hi)) = value_range(stats) else {
        return img;
    };
    let n = stats.len().max(2) - 1;
    let point = |i: usize, v: f64| {
        let x = margin + (i as i64 * w) / n as i64;
        let y = margin + ((hi - v) / (hi - lo) * h as f64).round() as i64;
        (x, y)
    };
    for ((_, get), colour) in SERIES.iter().zip([WORST, MEAN, BEST]) {
        let mut prev = None;
        for (i, s) in stats.iter().enumerate() {
            let v = get(s);
            if !v.is_finite() {
                prev = None;
                continue;
            }
            let p = point(i, v);
            line(&mut img, prev.unwrap_or(p), p, colour);
            prev = Some(p);
        }
    }
    img
}

/// Writes a PNG when `out` ends in `.png`, ASCII to stdout for `-`, and an
/// ASCII chart to the file otherwise.
pub fn plot_to(stats: &[GenerationStats], out: &Path) -> Result<()> {
    let is_png = out
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("png"));
    if is_png {
        render_image(stats, 800, 500)
            .save(out)
            .map_err(|e| Error::Image {
                path: out.to_path_buf(),
                message: e.to_string(),
            })
    } else if out == Path::new("-") {
        print!("{}", render_ascii(stats, 72, 20));
        Ok(())
    } else {
        std::fs::write(out, render_ascii(stats, 72, 20)).map_err(|e| Error::io(out, e))
    }
}
