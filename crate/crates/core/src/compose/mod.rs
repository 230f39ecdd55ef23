//! Renders token sequences back into screen images by stacking crops.

use image::{imageops, Rgb, RgbImage};
use thiserror::Error;

use crate::corpus::SubtreeRepository;
use crate::TokenId;

/// Thickness of the optional separator lines drawn between crops.
pub const SEPARATOR_PX: u32 = 4;
pub const SEPARATOR_COLOR: Rgb<u8> = Rgb([255, 0, 0]);

#[derive(Debug, Error)]
pub enum ComposeError {
    #[error("token {0} is not in the repository")]
    UnknownToken(TokenId),
    #[error("cannot render an empty sequence")]
    EmptySequence,
    #[error("output size {0}x{1} must be positive")]
    InvalidSize(u32, u32),
}

/// Stacks each token's crop, scaled to `out_width` with its aspect ratio
/// kept, from the top of an `out_width × out_height` canvas.
///
/// Space left below the last crop takes the mean color of that crop's bottom
/// row; a crop that runs past the canvas is clipped. With `separators`, a red
/// band is drawn across every boundary between two crops.
pub fn render_sequence(
    tokens: &[TokenId],
    repo: &SubtreeRepository,
    out_width: u32,
    out_height: u32,
    separators: bool,
) -> Result<RgbImage, ComposeError> {
    if tokens.is_empty() {
        return Err(ComposeError::EmptySequence);
    }
    if out_width == 0 || out_height == 0 {
        return Err(ComposeError::InvalidSize(out_width, out_height));
    }
    let crops = tokens
        .iter()
        .map(|&t| repo.get(t).map(|s| &s.crop).ok_or(ComposeError::UnknownToken(t)))
        .collect::<Result<Vec<_>, _>>()?;

    let mut canvas = RgbImage::new(out_width, out_height);
    let mut y = 0u32;
    let mut boundaries = Vec::new();
    let mut last_row = Rgb([0, 0, 0]);
    for crop in crops {
        if y >= out_height {
            break;
        }
        let scaled = scale_to_width(crop, out_width);
        let visible = scaled.height().min(out_height - y);
        imageops::replace(&mut canvas, &*imageops::crop_imm(&scaled, 0, 0, out_width, visible), 0, i64::from(y));
        last_row = row_mean(&scaled, scaled.height() - 1);
        if y > 0 {
            boundaries.push(y);
        }
        y += scaled.height();
    }
    for yy in y.min(out_height)..out_height {
        for x in 0..out_width {
            canvas.put_pixel(x, yy, last_row);
        }
    }
    if separators {
        for b in boundaries {
            let top = b.saturating_sub(SEPARATOR_PX / 2);
            for yy in top..(top + SEPARATOR_PX).min(out_height) {
                for x in 0..out_width {
                    canvas.put_pixel(x, yy, SEPARATOR_COLOR);
                }
            }
        }
    }
    Ok(canvas)
}

/// Nearest-neighbor resize to `width`, rounding the scaled height.
pub fn scale_to_width(img: &RgbImage, width: u32) -> RgbImage {
    let (w, h) = img.dimensions();
    if w == width {
        return img.clone();
    }
    let height = ((f64::from(h) * f64::from(width) / f64::from(w.max(1))).round() as u32).max(1);
    imageops::resize(img, width, height, imageops::FilterType::Nearest)
}

fn row_mean(img: &RgbImage, y: u32) -> Rgb<u8> {
    let mut sum = [0u64; 3];
    for x in 0..img.width() {
        let p = img.get_pixel(x, y);
        for c in 0..3 {
            sum[c] += u64::from(p[c]);
        }
    }
    let n = u64::from(img.width().max(1));
    Rgb(sum.map(|s| ((s + n / 2) / n) as u8))
}
