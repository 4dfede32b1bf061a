//! Hole filling, color fusion and anaglyph rendering.
//!
//! [`pushpull_inpaint`] is a smooth, deterministic stand-in for a generative
//! scene painter and [`masked_color_fuse`] a feathered blend standing in for a
//! learned color fuser. Real models plug in by supplying their images instead.

use crate::curation::blend;
use crate::error::{Error, Result};
use crate::imagecore::{ensure_same_dims, gaussian_blur, BinaryMask, ImageRgb};

type Px = [f64; 3];

fn clamp_between(v: f64, a: f64, b: f64) -> f64 {
    v.clamp(a.min(b), a.max(b))
}

fn lerp(a: Px, b: Px, t: f64) -> Px {
    std::array::from_fn(|k| clamp_between(a[k] + t * (b[k] - a[k]), a[k], b[k]))
}

/// Half-resolution average of valid pixels (running mean, so constant
/// neighborhoods stay exact).
fn push(px: &[Px], valid: &[bool], w: usize, h: usize) -> (Vec<Px>, Vec<bool>, usize, usize) {
    let (cw, ch) = (w.div_ceil(2), h.div_ceil(2));
    let mut out = vec![[0.0; 3]; cw * ch];
    let mut ok = vec![false; cw * ch];
    for cy in 0..ch {
        for cx in 0..cw {
            let mut mean = [0.0; 3];
            let mut lo = [f64::INFINITY; 3];
            let mut hi = [f64::NEG_INFINITY; 3];
            let mut k = 0.0;
            for y in 2 * cy..(2 * cy + 2).min(h) {
                for x in 2 * cx..(2 * cx + 2).min(w) {
                    let i = y * w + x;
                    if !valid[i] {
                        continue;
                    }
                    k += 1.0;
                    for c in 0..3 {
                        mean[c] += (px[i][c] - mean[c]) / k;
                        lo[c] = lo[c].min(px[i][c]);
                        hi[c] = hi[c].max(px[i][c]);
                    }
                }
            }
            if k > 0.0 {
                ok[cy * cw + cx] = true;
                out[cy * cw + cx] = std::array::from_fn(|c| mean[c].clamp(lo[c], hi[c]));
            }
        }
    }
    (out, ok, cw, ch)
}

fn fill(px: &[Px], valid: &[bool], w: usize, h: usize) -> Vec<Px> {
    if valid.iter().all(|v| *v) {
        return px.to_vec();
    }
    let (coarse, ok, cw, ch) = push(px, valid, w, h);
    let coarse = fill(&coarse, &ok, cw, ch);
    let sample = |x: usize, y: usize| {
        let sx = (x as f64 * 0.5 - 0.25).clamp(0.0, (cw - 1) as f64);
        let sy = (y as f64 * 0.5 - 0.25).clamp(0.0, (ch - 1) as f64);
        let (x0, y0) = (sx.floor() as usize, sy.floor() as usize);
        let (x1, y1) = ((x0 + 1).min(cw - 1), (y0 + 1).min(ch - 1));
        let (tx, ty) = (sx - x0 as f64, sy - y0 as f64);
        let top = lerp(coarse[y0 * cw + x0], coarse[y0 * cw + x1], tx);
        let bottom = lerp(coarse[y1 * cw + x0], coarse[y1 * cw + x1], tx);
        lerp(top, bottom, ty)
    };
    (0..w * h)
        .map(|i| if valid[i] { px[i] } else { sample(i % w, i / w) })
        .collect()
}

/// Fills uncovered pixels from a push-pull pyramid; covered pixels are
/// returned unchanged.
pub fn pushpull_inpaint(img: &ImageRgb, coverage: &BinaryMask) -> Result<ImageRgb> {
    ensure_same_dims("pushpull_inpaint", (img.width(), img.height()), coverage.dims())?;
    if coverage.none_set() {
        return Err(Error::EmptySelection("pushpull_inpaint coverage"));
    }
    let (w, h) = (img.width(), img.height());
    let px: Vec<Px> = img.data().chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
    let filled = fill(&px, coverage.data(), w, h);
    Ok(ImageRgb::from_vec_unchecked(w, h, filled.into_iter().flatten().collect()))
}

/// Blends `warped` over `inpainted` with the coverage mask feathered by a
/// Gaussian of `feather_sigma` pixels; `0` selects hard switching.
pub fn masked_color_fuse(
    warped: &ImageRgb,
    inpainted: &ImageRgb,
    coverage: &BinaryMask,
    feather_sigma: f64,
) -> Result<ImageRgb> {
    let dims = (warped.width(), warped.height());
    ensure_same_dims("masked_color_fuse", dims, (inpainted.width(), inpainted.height()))?;
    ensure_same_dims("masked_color_fuse", dims, coverage.dims())?;
    if !(feather_sigma >= 0.0 && feather_sigma.is_finite()) {
        return Err(Error::param("feather_sigma", "must be finite and non-negative"));
    }
    let mask = coverage.to_map();
    let weights = if feather_sigma == 0.0 {
        mask
    } else {
        gaussian_blur(&mask, feather_sigma)?
    };
    let data = warped
        .data()
        .chunks_exact(3)
        .zip(inpainted.data().chunks_exact(3))
        .zip(weights.data())
        .flat_map(|((a, b), w)| {
            let w = w.clamp(0.0, 1.0);
            [blend(w, a[0], b[0]), blend(w, a[1], b[1]), blend(w, a[2], b[2])]
        })
        .collect();
    Ok(ImageRgb::from_vec_unchecked(dims.0, dims.1, data))
}

/// Red-cyan anaglyph: red from the left view, green and blue from the right.
pub fn anaglyph(left: &ImageRgb, right: &ImageRgb) -> Result<ImageRgb> {
    ensure_same_dims("anaglyph", (left.width(), left.height()), (right.width(), right.height()))?;
    let data = left
        .data()
        .chunks_exact(3)
        .zip(right.data().chunks_exact(3))
        .flat_map(|(l, r)| [l[0], r[1], r[2]])
        .collect();
    Ok(ImageRgb::from_vec_unchecked(left.width(), left.height(), data))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(w: usize, h: usize) -> ImageRgb {
        ImageRgb::from_fn(w, h, |x, y| [x as f64 / w as f64, y as f64 / h as f64, 0.3]).unwrap()
    }

    #[test]
    fn full_coverage_is_identity() {
        let img = ramp(5, 4);
        assert_eq!(pushpull_inpaint(&img, &BinaryMask::full(5, 4)).unwrap(), img);
    }

    #[test]
    fn hole_in_constant_field() {
        let c = [0.3, 0.6, 0.9];
        let img = ImageRgb::filled(5, 5, c).unwrap();
        let mut cov = BinaryMask::full(5, 5);
        cov.set(2, 2, false);
        let out = pushpull_inpaint(&img, &cov).unwrap();
        assert_eq!(out.pixel(2, 2), c);
    }

    #[test]
    fn large_holes_filled_within_range() {
        let img = ramp(13, 9);
        let cov = BinaryMask::from_fn(13, 9, |x, y| x < 3 && y > 5);
        let out = pushpull_inpaint(&img, &cov).unwrap();
        for (x, y) in cov.iter_set() {
            assert_eq!(out.pixel(x, y), img.pixel(x, y));
        }
        for p in out.data().chunks_exact(3) {
            assert!(p[0] <= 2.0 / 13.0 && p[1] >= 6.0 / 9.0);
        }
        assert!(matches!(
            pushpull_inpaint(&img, &BinaryMask::empty(13, 9)),
            Err(Error::EmptySelection(_))
        ));
    }

    #[test]
    fn fuse_modes() {
        let a = ramp(6, 6);
        let b = ImageRgb::filled(6, 6, [0.5; 3]).unwrap();
        assert_eq!(masked_color_fuse(&a, &b, &BinaryMask::full(6, 6), 1.0).unwrap(), a);
        assert_eq!(masked_color_fuse(&a, &b, &BinaryMask::empty(6, 6), 1.0).unwrap(), b);
        let cov = BinaryMask::from_fn(6, 6, |x, _| x < 3);
        let hard = masked_color_fuse(&a, &b, &cov, 0.0).unwrap();
        for y in 0..6 {
            for x in 0..6 {
                assert_eq!(hard.pixel(x, y), if x < 3 { a.pixel(x, y) } else { b.pixel(x, y) });
            }
        }
        assert!(masked_color_fuse(&a, &b, &cov, -1.0).is_err());
    }

    #[test]
    fn anaglyph_channels() {
        let red = ImageRgb::filled(1, 1, [1.0, 0.0, 0.0]).unwrap();
        let cyan = ImageRgb::filled(1, 1, [0.0, 1.0, 1.0]).unwrap();
        assert_eq!(anaglyph(&red, &cyan).unwrap().data(), &[1.0; 3]);
        let black = ImageRgb::filled(1, 1, [0.0; 3]).unwrap();
        let white = ImageRgb::filled(1, 1, [1.0; 3]).unwrap();
        assert_eq!(anaglyph(&black, &white).unwrap().data(), &[0.0, 1.0, 1.0]);
        assert_eq!(anaglyph(&red, &red).unwrap(), red);
    }
}
