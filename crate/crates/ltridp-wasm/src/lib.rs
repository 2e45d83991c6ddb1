//! Browser bindings for the LTriDP demo page: histogram equalization,
//! code-map extraction and feature histograms over raw grayscale buffers.

use wasm_bindgen::prelude::*;

use ltridp::descriptor::{self, Bins};
use ltridp::imaging::GrayImage;
use ltridp::preprocess;

fn image_from_parts(width: usize, height: usize, pixels: &[u8]) -> Result<GrayImage, JsError> {
    GrayImage::new(width, height, pixels.to_vec()).map_err(|e| JsError::new(&e.to_string()))
}

fn bins_from_count(bins: usize) -> Result<Bins, JsError> {
    match bins {
        256 => Ok(Bins::Full),
        50 => Ok(Bins::Compat150),
        other => Err(JsError::new(&format!("bins must be 256 or 50, got {other}"))),
    }
}

/// Histogram-equalizes a row-major grayscale buffer.
#[wasm_bindgen]
pub fn equalize_image(width: usize, height: usize, pixels: &[u8]) -> Result<Vec<u8>, JsError> {
    let img = image_from_parts(width, height, pixels)?;
    Ok(preprocess::equalize(&img).data().to_vec())
}

/// The three LTriDP code planes of an image interior, (width-2)x(height-2).
#[wasm_bindgen]
pub struct CodePlanes {
    width: usize,
    height: usize,
    pattern1: Vec<u8>,
    pattern2: Vec<u8>,
    magnitude: Vec<u8>,
}

#[wasm_bindgen]
impl CodePlanes {
    #[wasm_bindgen(getter)]
    pub fn width(&self) -> usize {
        self.width
    }

    #[wasm_bindgen(getter)]
    pub fn height(&self) -> usize {
        self.height
    }

    #[wasm_bindgen(getter)]
    pub fn pattern1(&self) -> Vec<u8> {
        self.pattern1.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn pattern2(&self) -> Vec<u8> {
        self.pattern2.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn magnitude(&self) -> Vec<u8> {
        self.magnitude.clone()
    }
}

/// Computes the LTriDP pattern and magnitude code maps.
#[wasm_bindgen]
pub fn compute_code_maps(
    width: usize,
    height: usize,
    pixels: &[u8],
) -> Result<CodePlanes, JsError> {
    let img = image_from_parts(width, height, pixels)?;
    let maps = descriptor::code_maps(&img).map_err(|e| JsError::new(&e.to_string()))?;
    Ok(CodePlanes {
        width: maps.width,
        height: maps.height,
        pattern1: maps.pattern1,
        pattern2: maps.pattern2,
        magnitude: maps.magnitude,
    })
}

/// Concatenated LTriDP feature histogram (3 x bins values; bins 256 or 50).
#[wasm_bindgen]
pub fn extract_feature(
    width: usize,
    height: usize,
    pixels: &[u8],
    bins: usize,
) -> Result<Vec<f64>, JsError> {
    let img = image_from_parts(width, height, pixels)?;
    descriptor::extract_feature(&img, bins_from_count(bins)?)
        .map_err(|e| JsError::new(&e.to_string()))
}
