//! Row-major single-channel rasters and the `DMAP` density file format.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "DMAP"
//! 4       2     version (u16 LE) = 1
//! 6       2     reserved (u16 LE) = 0
//! 8       4     height (u32 LE)
//! 12      4     width (u32 LE)
//! 16      4*h*w values, f32 LE, row-major
//! ```

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DMAP_MAGIC: &[u8; 4] = b"DMAP";
pub const DMAP_VERSION: u16 = 1;
pub const DMAP_HEADER_LEN: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct Raster<T> {
    height: usize,
    width: usize,
    data: Vec<T>,
}

impl<T: Scalar> Raster<T> {
    pub fn zeros(height: usize, width: usize) -> Self {
        Raster { height, width, data: vec![T::zero(); height * width] }
    }

    pub fn filled(height: usize, width: usize, value: T) -> Self {
        Raster { height, width, data: vec![value; height * width] }
    }

    pub fn from_vec(height: usize, width: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::Format(format!(
                "raster {height}x{width} needs {} values, got {}",
                height * width,
                data.len()
            )));
        }
        Ok(Raster { height, width, data })
    }

    /// Builds a raster by evaluating `f(row, col)` at every pixel.
    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for y in 0..height {
            for x in 0..width {
                data.push(f(y, x));
            }
        }
        Raster { height, width, data }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// `(height, width)`
    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn row(&self, y: usize) -> &[T] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn row_mut(&mut self, y: usize) -> &mut [T] {
        &mut self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn get(&self, y: usize, x: usize) -> Option<T> {
        (y < self.height && x < self.width).then(|| self.data[y * self.width + x])
    }

    /// Sum of all values, accumulated in `f64`.
    pub fn sum(&self) -> f64 {
        self.data.iter().map(|v| v.as_f64()).sum()
    }

    pub fn max_value(&self) -> T {
        self.data.iter().copied().fold(T::zero(), T::max)
    }

    /// True when every value is finite and `>= 0`.
    pub fn is_density(&self) -> bool {
        self.data.iter().all(|v| v.is_finite() && *v >= T::zero())
    }

    pub fn cast<U: Scalar>(&self) -> Raster<U> {
        Raster {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|v| U::lit(v.as_f64())).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Raster<T> {
        Raster { height: self.height, width: self.width, data: self.data.iter().map(|&v| f(v)).collect() }
    }
}

impl<T> Index<(usize, usize)> for Raster<T> {
    type Output = T;

    fn index(&self, (y, x): (usize, usize)) -> &T {
        assert!(x < self.width, "column {x} out of range");
        &self.data[y * self.width + x]
    }
}

impl<T> IndexMut<(usize, usize)> for Raster<T> {
    fn index_mut(&mut self, (y, x): (usize, usize)) -> &mut T {
        assert!(x < self.width, "column {x} out of range");
        &mut self.data[y * self.width + x]
    }
}

/// Encodes a raster as a `DMAP` file.
pub fn write_density(raster: &Raster<f32>) -> Vec<u8> {
    let mut out = Vec::with_capacity(DMAP_HEADER_LEN + 4 * raster.data.len());
    out.extend_from_slice(DMAP_MAGIC);
    out.extend_from_slice(&DMAP_VERSION.to_le_bytes());
    out.extend_from_slice(&0u16.to_le_bytes());
    out.extend_from_slice(&(raster.height as u32).to_le_bytes());
    out.extend_from_slice(&(raster.width as u32).to_le_bytes());
    for v in &raster.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn u16_at(bytes: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([bytes[at], bytes[at + 1]])
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap())
}

/// Decodes a `DMAP` file. Rejects bad magic, unknown versions, size mismatches
/// and negative or non-finite values.
pub fn read_density(bytes: &[u8]) -> Result<Raster<f32>> {
    if bytes.len() < DMAP_HEADER_LEN {
        return Err(Error::Format(format!("truncated header: {} bytes", bytes.len())));
    }
    if &bytes[0..4] != DMAP_MAGIC {
        return Err(Error::Format(format!("bad magic {:?}", String::from_utf8_lossy(&bytes[0..4]))));
    }
    let version = u16_at(bytes, 4);
    if version != DMAP_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let reserved = u16_at(bytes, 6);
    if reserved != 0 {
        return Err(Error::Format(format!("reserved field is {reserved}, expected 0")));
    }
    let height = u32_at(bytes, 8) as usize;
    let width = u32_at(bytes, 12) as usize;
    let expected = height
        .checked_mul(width)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(DMAP_HEADER_LEN))
        .ok_or_else(|| Error::Format(format!("raster {height}x{width} too large")))?;
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "payload for {height}x{width} needs {expected} bytes, got {}",
            bytes.len()
        )));
    }
    let data: Vec<f32> = bytes[DMAP_HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if let Some(pos) = data.iter().position(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::Format(format!("invalid density value {} at index {pos}", data[pos])));
    }
    Ok(Raster { height, width, data })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_pixel_round_trip() {
        let r = Raster::from_vec(1, 1, vec![0.0f32]).unwrap();
        let bytes = write_density(&r);
        assert_eq!(bytes.len(), 20);
        assert_eq!(read_density(&bytes).unwrap(), r);
    }

    #[test]
    fn golden_two_by_three() {
        // Hand-assembled file: header, then 0.0 1.0 2.0 3.0 4.0 5.0 as f32 LE.
        #[rustfmt::skip]
        let golden: [u8; 40] = [
            b'D', b'M', b'A', b'P', 0x01, 0x00, 0x00, 0x00,
            0x02, 0x00, 0x00, 0x00, 0x03, 0x00, 0x00, 0x00,
            0x00, 0x00, 0x00, 0x00,
            0x00, 0x00, 0x80, 0x3f,
            0x00, 0x00, 0x00, 0x40,
            0x00, 0x00, 0x40, 0x40,
            0x00, 0x00, 0x80, 0x40,
            0x00, 0x00, 0xa0, 0x40,
        ];
        let r = Raster::from_vec(2, 3, (0..6).map(|v| v as f32).collect()).unwrap();
        assert_eq!(write_density(&r), golden);
        let back = read_density(&golden).unwrap();
        assert_eq!(back, r);
        assert_eq!(back[(1, 2)], 5.0);
    }

    #[test]
    fn rejects_bad_files() {
        let mut bytes = write_density(&Raster::filled(2, 2, 1.0f32));
        let mut bad_magic = bytes.clone();
        bad_magic[0..4].copy_from_slice(b"XXXX");
        assert!(matches!(read_density(&bad_magic), Err(Error::Format(m)) if m.contains("magic")));
        assert!(read_density(&bytes[..bytes.len() - 1]).is_err());
        assert!(read_density(&bytes[..10]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(read_density(&extra).is_err());
        let n = bytes.len();
        bytes[n - 4..].copy_from_slice(&(-1.0f32).to_le_bytes());
        assert!(read_density(&bytes).is_err());
        let mut v2 = write_density(&Raster::filled(1, 1, 1.0f32));
        v2[4] = 2;
        assert!(read_density(&v2).is_err());
    }

    proptest! {
        #[test]
        fn round_trip_bit_exact(h in 1usize..8, w in 1usize..8, seed in prop::collection::vec(0.0f32..f32::MAX, 64)) {
            let data: Vec<f32> = seed.iter().copied().cycle().take(h * w).collect();
            let r = Raster::from_vec(h, w, data).unwrap();
            let bytes = write_density(&r);
            let back = read_density(&bytes).unwrap();
            prop_assert!(back.as_slice().iter().zip(r.as_slice()).all(|(a, b)| a.to_bits() == b.to_bits()));
            prop_assert_eq!(write_density(&back), bytes);
        }
    }
}
