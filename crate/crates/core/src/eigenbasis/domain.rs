use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Shape {
    /// (0, lx) × (0, ly)
    Rectangle { lx: f64, ly: f64 },
    /// Disk of the given radius centred at the origin.
    Disk { radius: f64 },
}

/// Reference shape plus a dilation factor. The physical domain is
/// `scale · shape`, so `Ω_ε = ε⁻¹Ω` is `rescale(1/ε)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub shape: Shape,
    pub scale: f64,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidDomain(format!("{name} must be positive and finite, got {v}")))
    }
}

impl DomainSpec {
    pub fn rectangle(lx: f64, ly: f64) -> Result<Self> {
        positive("Lx", lx)?;
        positive("Ly", ly)?;
        Ok(Self { shape: Shape::Rectangle { lx, ly }, scale: 1.0 })
    }

    pub fn square(l: f64) -> Result<Self> {
        Self::rectangle(l, l)
    }

    pub fn disk(radius: f64) -> Result<Self> {
        positive("R", radius)?;
        Ok(Self { shape: Shape::Disk { radius }, scale: 1.0 })
    }

    pub fn validate(&self) -> Result<()> {
        positive("scale_factor", self.scale)?;
        match self.shape {
            Shape::Rectangle { lx, ly } => {
                positive("Lx", lx)?;
                positive("Ly", ly)
            }
            Shape::Disk { radius } => positive("R", radius),
        }
    }

    /// Dilate by `a`: lengths are multiplied by `a`.
    pub fn rescale(&self, a: f64) -> Result<Self> {
        positive("rescale factor", a)?;
        Ok(Self { shape: self.shape, scale: self.scale * a })
    }

    pub fn is_disk(&self) -> bool {
        matches!(self.shape, Shape::Disk { .. })
    }

    /// Physical side lengths of a rectangle.
    pub fn sides(&self) -> Option<(f64, f64)> {
        match self.shape {
            Shape::Rectangle { lx, ly } => Some((lx * self.scale, ly * self.scale)),
            Shape::Disk { .. } => None,
        }
    }

    pub fn radius(&self) -> Option<f64> {
        match self.shape {
            Shape::Disk { radius } => Some(radius * self.scale),
            Shape::Rectangle { .. } => None,
        }
    }

    pub fn area(&self) -> f64 {
        match self.shape {
            Shape::Rectangle { lx, ly } => lx * ly * self.scale * self.scale,
            Shape::Disk { radius } => {
                let r = radius * self.scale;
                std::f64::consts::PI * r * r
            }
        }
    }

    pub fn diameter(&self) -> f64 {
        match self.shape {
            Shape::Rectangle { lx, ly } => self.scale * lx.hypot(ly),
            Shape::Disk { radius } => 2.0 * radius * self.scale,
        }
    }

    pub fn inradius(&self) -> f64 {
        match self.shape {
            Shape::Rectangle { lx, ly } => 0.5 * self.scale * lx.min(ly),
            Shape::Disk { radius } => radius * self.scale,
        }
    }

    pub fn center(&self) -> Point {
        match self.sides() {
            Some((lx, ly)) => [0.5 * lx, 0.5 * ly],
            None => [0.0, 0.0],
        }
    }

    /// Signed distance to the boundary, positive inside.
    pub fn distance_to_boundary(&self, p: Point) -> f64 {
        match self.sides() {
            Some((lx, ly)) => p[0].min(lx - p[0]).min(p[1]).min(ly - p[1]),
            None => self.radius().unwrap() - p[0].hypot(p[1]),
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        self.distance_to_boundary(p) > 0.0
    }

    /// Nearest point of the closed domain.
    pub fn clamp(&self, p: Point) -> Point {
        match self.sides() {
            Some((lx, ly)) => [p[0].clamp(0.0, lx), p[1].clamp(0.0, ly)],
            None => {
                let r = self.radius().unwrap();
                let d = p[0].hypot(p[1]);
                if d <= r {
                    p
                } else {
                    [p[0] * r / d, p[1] * r / d]
                }
            }
        }
    }

    /// Bounding box (xmin, xmax, ymin, ymax).
    pub fn bounding_box(&self) -> [f64; 4] {
        match self.sides() {
            Some((lx, ly)) => [0.0, lx, 0.0, ly],
            None => {
                let r = self.radius().unwrap();
                [-r, r, -r, r]
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nonpositive_geometry() {
        assert!(DomainSpec::rectangle(0.0, 1.0).is_err());
        assert!(DomainSpec::disk(-1.0).is_err());
        assert!(DomainSpec::square(1.0).unwrap().rescale(0.0).is_err());
    }

    #[test]
    fn rescale_composes_on_powers_of_two() {
        let d = DomainSpec::rectangle(1.0, 2.0).unwrap();
        let a = d.rescale(0.5).unwrap().rescale(8.0).unwrap();
        assert_eq!(a, d.rescale(4.0).unwrap());
        assert_eq!(a.sides(), Some((4.0, 8.0)));
    }
}
