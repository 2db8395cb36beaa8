//! Binary images.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    pub width: usize,
    pub height: usize,
    /// Row-major.
    pub data: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![false; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mut m = Self::new(width, height);
        for y in 0..height {
            for x in 0..width {
                m.data[y * width + x] = f(x, y);
            }
        }
        m
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.data[y * self.width + x] = v;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|b| **b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    pub fn same_shape(&self, other: &Mask) -> Result<()> {
        if (self.width, self.height) == (other.width, other.height) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )))
        }
    }

    pub fn intersection_count(&self, other: &Mask) -> usize {
        self.data.iter().zip(&other.data).filter(|(a, b)| **a && **b).count()
    }

    /// Pixels set in the mask whose 3×3 neighbourhood leaves the mask
    /// (pixels outside the image count as unset): the mask minus its
    /// 8-connected erosion.
    pub fn boundary(&self) -> Mask {
        let (w, h) = (self.width as isize, self.height as isize);
        Mask::from_fn(self.width, self.height, |x, y| {
            if !self.get(x, y) {
                return false;
            }
            for dy in -1..=1isize {
                for dx in -1..=1isize {
                    let (nx, ny) = (x as isize + dx, y as isize + dy);
                    if nx < 0 || ny < 0 || nx >= w || ny >= h || !self.get(nx as usize, ny as usize) {
                        return true;
                    }
                }
            }
            false
        })
    }

    /// Set pixel coordinates, row-major.
    pub fn pixels(&self) -> Vec<(usize, usize)> {
        self.data
            .iter()
            .enumerate()
            .filter(|(_, b)| **b)
            .map(|(i, _)| (i % self.width, i / self.width))
            .collect()
    }

    /// Mean pixel-centre position of set pixels.
    pub fn centroid(&self) -> Option<(f64, f64)> {
        let px = self.pixels();
        if px.is_empty() {
            return None;
        }
        let n = px.len() as f64;
        let (sx, sy) = px
            .iter()
            .fold((0.0, 0.0), |(a, b), (x, y)| (a + *x as f64 + 0.5, b + *y as f64 + 0.5));
        Some((sx / n, sy / n))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_boundary() {
        let m = Mask::from_fn(12, 12, |x, y| (1..11).contains(&x) && (1..11).contains(&y));
        let b = m.boundary();
        assert_eq!(b.count(), 36);
        assert!(b.get(1, 1) && b.get(10, 5) && !b.get(5, 5));
    }

    #[test]
    fn image_edge_counts_as_outside() {
        let m = Mask::from_fn(3, 3, |_, _| true);
        assert_eq!(m.boundary().count(), 8);
    }

    #[test]
    fn centroid_of_block() {
        let m = Mask::from_fn(4, 4, |x, y| x < 2 && y < 2);
        assert_eq!(m.centroid(), Some((1.0, 1.0)));
    }
}
