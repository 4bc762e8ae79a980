use alloc::vec::Vec;

use super::{
    find_components, mask_vegetation, morphology_open, rgb_to_hsv, sharpen, BBox, RgbImage,
    SegmentationParams,
};

/// One plant cut out of a field image.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantSegment {
    /// Sharpened bounding-box cut with every pixel outside the plant set to black.
    pub image: RgbImage,
    /// Location in the source image.
    pub bbox: BBox,
    pub area_fraction: f64,
    pub shape_ratio: f64,
}

/// Extracts plant objects from a field image.
///
/// Components whose bounding box covers less than `t_size` of the image, or
/// whose side ratio is below `t_ratio`, are dropped. Segments come back in
/// component order.
pub fn segment_field_image(img: &RgbImage, params: &SegmentationParams) -> Vec<PlantSegment> {
    let hsv = rgb_to_hsv(img);
    let mask = mask_vegetation(&hsv, params);
    let opened = morphology_open(&mask, params.open_kernel_side);
    let img_area = (img.width() * img.height()) as f64;

    find_components(&opened)
        .into_iter()
        .filter_map(|comp| {
            let bbox = comp.bbox;
            let area_fraction = bbox.area() as f64 / img_area;
            if area_fraction < params.t_size {
                return None;
            }
            let shape_ratio = bbox.shape_ratio();
            if shape_ratio < params.t_ratio {
                return None;
            }
            let mut cut = sharpen(&img.crop(bbox));
            let mut inside = alloc::vec![false; bbox.area()];
            for &p in &comp.pixels {
                let (x, y) = (p % img.width(), p / img.width());
                inside[(y - bbox.y) * bbox.w + (x - bbox.x)] = true;
            }
            for (px, keep) in cut.pixels_mut().iter_mut().zip(&inside) {
                if !keep {
                    *px = [0, 0, 0];
                }
            }
            Some(PlantSegment {
                image: cut,
                bbox,
                area_fraction,
                shape_ratio,
            })
        })
        .collect()
}
