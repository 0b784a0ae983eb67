//! Square Gray-mapped QAM with mean symbol energy `Es`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GfdmError, Result};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Qam {
    order: usize,
    side: usize,
    bits_per_axis: u32,
    scale: f64,
}

fn gray(i: usize) -> usize {
    i ^ (i >> 1)
}

fn gray_inverse(mut g: usize) -> usize {
    let mut i = g;
    while g > 0 {
        g >>= 1;
        i ^= g;
    }
    i
}

impl Qam {
    /// `order` must be a perfect square power of two, at least 4.
    pub fn new(order: usize, es: f64) -> Result<Self> {
        let side = (order as f64).sqrt().round() as usize;
        if order < 4 || side * side != order || !side.is_power_of_two() {
            return Err(GfdmError::InvalidParams(format!(
                "constellation order {order} is not a square power of two >= 4"
            )));
        }
        if !(es > 0.0) || !es.is_finite() {
            return Err(GfdmError::InvalidParams(format!("symbol energy must be positive, got {es}")));
        }
        // Levels +-1, +-3, ... have mean energy 2 (side^2 - 1) / 3.
        let mean = 2.0 * ((side * side - 1) as f64) / 3.0;
        Ok(Self { order, side, bits_per_axis: side.trailing_zeros(), scale: (es / mean).sqrt() })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn es(&self) -> f64 {
        let side = self.side as f64;
        self.scale * self.scale * 2.0 * (side * side - 1.0) / 3.0
    }

    /// Distance between adjacent constellation points.
    pub fn min_distance(&self) -> f64 {
        2.0 * self.scale
    }

    fn level(&self, pos: usize) -> f64 {
        (2.0 * pos as f64 - (self.side as f64 - 1.0)) * self.scale
    }

    fn nearest_pos(&self, x: f64) -> usize {
        let pos = ((x / self.scale + (self.side as f64 - 1.0)) / 2.0).round();
        pos.clamp(0.0, (self.side - 1) as f64) as usize
    }

    /// Constellation point for symbol index `idx < order`. The high bits
    /// select the in-phase level, the low bits the quadrature level, each
    /// Gray-coded.
    pub fn point(&self, idx: usize) -> C64 {
        debug_assert!(idx < self.order);
        let mask = self.side - 1;
        let i_pos = gray_inverse(idx >> self.bits_per_axis);
        let q_pos = gray_inverse(idx & mask);
        C64::new(self.level(i_pos), self.level(q_pos))
    }

    /// Minimum-distance decision, returning the symbol index.
    pub fn decide(&self, z: C64) -> usize {
        let i = gray(self.nearest_pos(z.re));
        let q = gray(self.nearest_pos(z.im));
        (i << self.bits_per_axis) | q
    }

    pub fn points(&self) -> Vec<C64> {
        (0..self.order).map(|i| self.point(i)).collect()
    }

    pub fn random_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        rng.random_range(0..self.order)
    }
}
