//! Binary morphology: dilation and erosion with a square structuring
//! element, connectivity-preserving thinning, and a component counter.
//!
//! Pixels outside the image are treated as background, so erosion shrinks
//! masks from the image border as well.

use crate::error::{Error, Result};
use crate::grid::LabelImage;

/// Square (Chebyshev-ball) structuring element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StructuringElement {
    radius: usize,
}

impl StructuringElement {
    pub fn square(radius: usize) -> Result<Self> {
        if radius == 0 {
            return Err(Error::OutOfRange(
                "structuring element radius",
                "must be at least 1".into(),
            ));
        }
        Ok(Self { radius })
    }

    pub fn radius(&self) -> usize {
        self.radius
    }
}

/// Minkowski dilation by the square element; the result is a superset of
/// the input.
pub fn dilate(mask: &LabelImage, se: StructuringElement) -> Result<LabelImage> {
    mask.require_binary()?;
    Ok(dilate_by(mask, se.radius))
}

/// Minkowski erosion by the square element; the result is a subset of the
/// input.
pub fn erode(mask: &LabelImage, se: StructuringElement) -> Result<LabelImage> {
    mask.require_binary()?;
    Ok(erode_by(mask, se.radius))
}

/// Dilation by a square of half-width `radius`; `radius = 0` is the
/// identity. Caller must pass a binary mask.
pub fn dilate_by(mask: &LabelImage, radius: usize) -> LabelImage {
    running_extreme(mask, radius, true)
}

/// Erosion by a square of half-width `radius`; `radius = 0` is the
/// identity. Caller must pass a binary mask.
pub fn erode_by(mask: &LabelImage, radius: usize) -> LabelImage {
    running_extreme(mask, radius, false)
}

/// Separable sliding-window max/min with out-of-image treated as 0.
fn running_extreme(mask: &LabelImage, radius: usize, is_max: bool) -> LabelImage {
    if radius == 0 {
        return mask.clone();
    }
    let (w, h) = (mask.width(), mask.height());
    let r = radius as isize;
    let window = |v: &dyn Fn(isize) -> u8, center: isize, len: isize| -> u8 {
        let mut acc = if is_max { 0 } else { 1 };
        for d in -r..=r {
            let p = center + d;
            let val = if p < 0 || p >= len { 0 } else { v(p) };
            if is_max {
                acc = acc.max(val);
            } else {
                acc = acc.min(val);
            }
        }
        acc
    };
    // horizontal pass
    let mut mid = vec![0u8; w * h];
    for y in 0..h {
        let row = mask.row(y);
        for x in 0..w {
            mid[y * w + x] = window(&|p| row[p as usize], x as isize, w as isize);
        }
    }
    // vertical pass
    let mut out = vec![0u8; w * h];
    for y in 0..h {
        for x in 0..w {
            out[y * w + x] = window(&|p| mid[p as usize * w + x], y as isize, h as isize);
        }
    }
    LabelImage::new(w, h, 2, out).expect("morphology output stays binary")
}

/// Thins a binary mask to a connectivity-preserving skeleton using
/// two-subiteration thinning on 8-connectivity.
///
/// Deletions are applied in raster order against the current state within
/// each subiteration, which keeps every 8-connected component alive (a
/// component can never lose its last pixel pair) at the cost of a slight
/// directional bias. The output is a subset of the input foreground and
/// contains no pixel whose full 3×3 neighborhood is foreground.
pub fn skeletonize(mask: &LabelImage) -> Result<LabelImage> {
    mask.require_binary()?;
    let (w, h) = (mask.width(), mask.height());
    let mut img = mask.data().to_vec();
    let at = |img: &[u8], x: isize, y: isize| -> u8 {
        if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
            0
        } else {
            img[y as usize * w + x as usize]
        }
    };
    loop {
        let mut changed = false;
        for step in 0..2 {
            for y in 0..h as isize {
                for x in 0..w as isize {
                    if at(&img, x, y) == 0 {
                        continue;
                    }
                    // p2..p9 clockwise starting north
                    let p = [
                        at(&img, x, y - 1),
                        at(&img, x + 1, y - 1),
                        at(&img, x + 1, y),
                        at(&img, x + 1, y + 1),
                        at(&img, x, y + 1),
                        at(&img, x - 1, y + 1),
                        at(&img, x - 1, y),
                        at(&img, x - 1, y - 1),
                    ];
                    let b: u8 = p.iter().sum();
                    if !(2..=6).contains(&b) {
                        continue;
                    }
                    let a = (0..8)
                        .filter(|&i| p[i] == 0 && p[(i + 1) % 8] == 1)
                        .count();
                    if a != 1 {
                        continue;
                    }
                    let (p2, p4, p6, p8) = (p[0], p[2], p[4], p[6]);
                    let ok = if step == 0 {
                        p2 * p4 * p6 == 0 && p4 * p6 * p8 == 0
                    } else {
                        p2 * p4 * p8 == 0 && p2 * p6 * p8 == 0
                    };
                    if ok {
                        img[y as usize * w + x as usize] = 0;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    Ok(LabelImage::new(w, h, 2, img).expect("thinning output stays binary"))
}

/// Number of 8-connected foreground components (flood fill).
pub fn connected_components(mask: &LabelImage) -> usize {
    let (w, h) = (mask.width(), mask.height());
    let mut visited = vec![false; w * h];
    let mut count = 0;
    let mut stack = Vec::new();
    for start in 0..w * h {
        if mask.data()[start] == 0 || visited[start] {
            continue;
        }
        count += 1;
        visited[start] = true;
        stack.push(start);
        while let Some(idx) = stack.pop() {
            let (x, y) = (idx % w, idx / w);
            for dy in -1isize..=1 {
                for dx in -1isize..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let (nx, ny) = (x as isize + dx, y as isize + dy);
                    if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    let nidx = ny as usize * w + nx as usize;
                    if mask.data()[nidx] != 0 && !visited[nidx] {
                        visited[nidx] = true;
                        stack.push(nidx);
                    }
                }
            }
        }
    }
    count
}

/// True when `a`'s foreground is contained in `b`'s.
pub fn is_subset(a: &LabelImage, b: &LabelImage) -> bool {
    a.data()
        .iter()
        .zip(b.data())
        .all(|(&va, &vb)| va == 0 || vb != 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask_from(rows: &[&[u8]]) -> LabelImage {
        let h = rows.len();
        let w = rows[0].len();
        let data: Vec<u8> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        LabelImage::new(w, h, 2, data).unwrap()
    }

    fn single_pixel(w: usize, h: usize, x: usize, y: usize) -> LabelImage {
        LabelImage::from_fn_binary(w, h, |px, py| px == x && py == y)
    }

    fn disk(w: usize, h: usize, cx: f64, cy: f64, r: f64) -> LabelImage {
        LabelImage::from_fn_binary(w, h, |x, y| {
            let dx = x as f64 - cx;
            let dy = y as f64 - cy;
            dx * dx + dy * dy <= r * r
        })
    }

    #[test]
    fn se_radius_must_be_positive() {
        assert!(StructuringElement::square(0).is_err());
        assert!(StructuringElement::square(1).is_ok());
    }

    #[test]
    fn single_pixel_dilates_to_block() {
        let m = single_pixel(5, 5, 2, 2);
        let d = dilate(&m, StructuringElement::square(1).unwrap()).unwrap();
        assert_eq!(d.count_class(1), 9);
        for y in 1..=3 {
            for x in 1..=3 {
                assert_eq!(d.get(x, y), 1);
            }
        }
    }

    #[test]
    fn thin_line_erodes_to_empty() {
        let m = LabelImage::from_fn_binary(9, 9, |_, y| y == 4);
        let e = erode(&m, StructuringElement::square(1).unwrap()).unwrap();
        assert_eq!(e.count_class(1), 0);
    }

    #[test]
    fn closing_is_a_superset() {
        let m = disk(32, 32, 15.0, 15.0, 6.0);
        let se = StructuringElement::square(2).unwrap();
        let closed = erode(&dilate(&m, se).unwrap(), se).unwrap();
        assert!(is_subset(&m, &closed));
    }

    #[test]
    fn dilation_extensive_erosion_antiextensive() {
        let m = disk(32, 32, 10.0, 20.0, 5.0);
        let se = StructuringElement::square(3).unwrap();
        assert!(is_subset(&m, &dilate(&m, se).unwrap()));
        assert!(is_subset(&erode(&m, se).unwrap(), &m));
    }

    #[test]
    fn erosion_shrinks_from_image_border() {
        let m = LabelImage::from_fn_binary(8, 8, |_, _| true);
        let e = erode(&m, StructuringElement::square(1).unwrap()).unwrap();
        assert_eq!(e.count_class(1), 36);
        assert_eq!(e.get(0, 0), 0);
        assert_eq!(e.get(1, 1), 1);
    }

    #[test]
    fn morphology_rejects_non_binary() {
        let m = LabelImage::zeros(4, 4, 3);
        assert!(dilate(&m, StructuringElement::square(1).unwrap()).is_err());
    }

    #[test]
    fn skeleton_of_thin_line_is_unchanged() {
        let m = LabelImage::from_fn_binary(16, 9, |_, y| y == 4);
        let s = skeletonize(&m).unwrap();
        assert_eq!(s, m);
    }

    #[test]
    fn skeleton_of_empty_is_empty() {
        let m = LabelImage::zeros(8, 8, 2);
        assert_eq!(skeletonize(&m).unwrap().count_class(1), 0);
    }

    #[test]
    fn skeleton_of_disk_keeps_one_component() {
        let m = disk(32, 32, 16.0, 16.0, 10.0);
        let s = skeletonize(&m).unwrap();
        assert!(s.count_class(1) > 0);
        assert!(s.count_class(1) <= m.count_class(1));
        assert!(is_subset(&s, &m));
        assert_eq!(connected_components(&s), 1);
    }

    #[test]
    fn skeleton_keeps_isolated_small_blocks() {
        // 2x2 blocks must not vanish
        let m = mask_from(&[
            &[0, 0, 0, 0, 0, 0],
            &[0, 1, 1, 0, 0, 0],
            &[0, 1, 1, 0, 0, 0],
            &[0, 0, 0, 0, 1, 0],
            &[0, 0, 0, 0, 0, 0],
        ]);
        let s = skeletonize(&m).unwrap();
        assert_eq!(connected_components(&s), 2);
    }

    #[test]
    fn skeleton_is_thin() {
        let m = disk(48, 48, 24.0, 24.0, 15.0);
        let s = skeletonize(&m).unwrap();
        for y in 1..47 {
            for x in 1..47 {
                let all_fg = (-1isize..=1).all(|dy| {
                    (-1isize..=1).all(|dx| {
                        s.get((x as isize + dx) as usize, (y as isize + dy) as usize) != 0
                    })
                });
                assert!(!all_fg, "solid 3x3 block at ({x}, {y})");
            }
        }
    }

    #[test]
    fn component_counter_on_scatter() {
        let m = mask_from(&[
            &[1, 0, 0, 1],
            &[0, 1, 0, 0],
            &[0, 0, 0, 1],
        ]);
        // (0,0) and (1,1) touch diagonally; (3,0) and (3,2) do not
        assert_eq!(connected_components(&m), 3);
    }
}
