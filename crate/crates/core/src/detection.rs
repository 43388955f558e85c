use crate::geometry::BoundingBox;
use crate::scalar::Scalar;

/// Where a detection came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum Origin {
    #[default]
    Global,
    /// Detection on the crop with the given index within its image.
    Crop(usize),
}

/// A scored box, in either crop-local or global coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection<T> {
    pub image_id: u64,
    pub category_id: u64,
    pub bbox: BoundingBox<T>,
    pub score: T,
    pub origin: Origin,
}

impl<T: Scalar> Detection<T> {
    pub fn new(image_id: u64, category_id: u64, bbox: BoundingBox<T>, score: T) -> Self {
        Detection { image_id, category_id, bbox, score, origin: Origin::Global }
    }

    pub fn with_origin(mut self, origin: Origin) -> Self {
        self.origin = origin;
        self
    }

    pub fn has_valid_score(&self) -> bool {
        self.score >= T::zero() && self.score <= T::one()
    }
}
