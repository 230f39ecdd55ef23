use guigan_ndnet::Tensor;
use image::{Rgb, RgbImage};

use super::{Result, SiameseConfig, StyleError};

const MID_GRAY: Rgb<u8> = Rgb([128, 128, 128]);

/// Nearest-neighbor resize with floor mapping `src = ⌊dst · src_dim / dst_dim⌋`.
pub fn resize_nearest(img: &RgbImage, (th, tw): (u32, u32)) -> Result<RgbImage> {
    let (sw, sh) = img.dimensions();
    if sw == 0 || sh == 0 || th == 0 || tw == 0 {
        return Err(StyleError::EmptyImage);
    }
    let xs: Vec<u32> = (0..tw).map(|x| (u64::from(x) * u64::from(sw) / u64::from(tw)) as u32).collect();
    Ok(RgbImage::from_fn(tw, th, |x, y| {
        let sy = (u64::from(y) * u64::from(sh) / u64::from(th)) as u32;
        *img.get_pixel(xs[x as usize], sy)
    }))
}

/// Centers the image on a mid-gray square canvas.
pub fn pad_to_square(img: &RgbImage) -> RgbImage {
    let (w, h) = img.dimensions();
    let side = w.max(h);
    let mut out = RgbImage::from_pixel(side, side, MID_GRAY);
    image::imageops::replace(&mut out, img, i64::from((side - w) / 2), i64::from((side - h) / 2));
    out
}

/// Crop → `[3, H, W]` tensor in `[0, 1]`.
pub fn to_input(img: &RgbImage, config: &SiameseConfig) -> Result<Tensor> {
    let (w, h) = img.dimensions();
    if w == 0 || h == 0 {
        return Err(StyleError::EmptyImage);
    }
    let (th, tw) = config.input_size;
    let distortion = (f64::from(w) / f64::from(h)) / (tw as f64 / th as f64);
    let padded;
    let src = match config.pad_distortion {
        Some(limit) if distortion.max(1.0 / distortion) > limit => {
            padded = pad_to_square(img);
            &padded
        }
        _ => img,
    };
    let resized = resize_nearest(src, (th as u32, tw as u32))?;
    let plane = th * tw;
    let mut data = vec![0.0f32; 3 * plane];
    for (i, px) in resized.pixels().enumerate() {
        for c in 0..3 {
            data[c * plane + i] = f32::from(px[c]) / 255.0;
        }
    }
    Ok(Tensor::from_vec(&[3, th, tw], data)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn numbered(w: u32, h: u32) -> RgbImage {
        RgbImage::from_fn(w, h, |x, y| Rgb([(y * w + x) as u8, 0, 0]))
    }

    #[test]
    fn upscale_replicates_blocks() {
        let src = numbered(2, 2);
        let out = resize_nearest(&src, (4, 4)).unwrap();
        for y in 0..4 {
            for x in 0..4 {
                assert_eq!(out.get_pixel(x, y), src.get_pixel(x / 2, y / 2));
            }
        }
    }

    #[test]
    fn identity_at_same_size() {
        let src = numbered(5, 3);
        assert_eq!(resize_nearest(&src, (3, 5)).unwrap(), src);
    }

    #[test]
    fn downscale_matches_index_oracle() {
        let src = numbered(3, 3);
        let out = resize_nearest(&src, (2, 2)).unwrap();
        // floor(d * 3 / 2): 0 -> 0, 1 -> 1
        let expect = [[0u8, 1], [3, 4]];
        for y in 0..2 {
            for x in 0..2 {
                assert_eq!(out.get_pixel(x, y)[0], expect[y as usize][x as usize]);
            }
        }
    }

    #[test]
    fn empty_image_is_rejected() {
        assert!(matches!(resize_nearest(&RgbImage::new(0, 3), (2, 2)), Err(StyleError::EmptyImage)));
    }

    #[test]
    fn extreme_strips_are_padded() {
        let strip = RgbImage::from_pixel(100, 10, Rgb([255, 0, 0]));
        let t = to_input(&strip, &SiameseConfig::desk()).unwrap();
        assert_eq!(t.shape(), &[3, 64, 32]);
        // top-left is padding, center row is the strip
        assert!((t.data()[0] - 128.0 / 255.0).abs() < 1e-6);
        assert_eq!(t.data()[32 * 32 + 16], 1.0);
        let direct = SiameseConfig { pad_distortion: None, ..SiameseConfig::desk() };
        assert!(to_input(&strip, &direct).unwrap().data()[..64 * 32].iter().all(|&v| v == 1.0));
    }
}
