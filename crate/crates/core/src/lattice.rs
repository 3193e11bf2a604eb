//! Uniform periodic lattice on the box `[-ρ, ρ)ⁿ`.

use alloc::vec::Vec;

use crate::linalg::Vec3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lattice {
    pub n: usize,
    /// Points per axis.
    pub count: usize,
    pub half: f64,
}

impl Lattice {
    pub fn new(n: usize, count: usize, half: f64) -> Self {
        Lattice { n, count, half }
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half / self.count as f64
    }

    pub fn len(&self) -> usize {
        self.count.pow(self.n as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.half + i as f64 * self.spacing()
    }

    /// Multi-index of flat index `k`; the last axis varies fastest.
    pub fn index(&self, k: usize) -> [usize; 3] {
        let mut idx = [0; 3];
        let mut rest = k;
        for a in (0..self.n).rev() {
            idx[a] = rest % self.count;
            rest /= self.count;
        }
        idx
    }

    pub fn flat(&self, idx: &[usize; 3]) -> usize {
        (0..self.n).fold(0, |acc, a| acc * self.count + idx[a])
    }

    pub fn point(&self, k: usize) -> Vec3 {
        let idx = self.index(k);
        core::array::from_fn(|a| if a < self.n { self.coord(idx[a]) } else { 0.0 })
    }

    pub fn points(&self) -> Vec<Vec3> {
        (0..self.len()).map(|k| self.point(k)).collect()
    }

    /// Angular frequency `2πk/(2ρ)` of DFT index `i`, with indices at or
    /// above `N/2` folded to negative frequencies.
    pub fn frequency(&self, i: usize) -> f64 {
        let k = if i < self.count / 2 {
            i as f64
        } else {
            i as f64 - self.count as f64
        };
        core::f64::consts::PI * k / self.half
    }

    pub fn frequency_vector(&self, k: usize) -> Vec3 {
        let idx = self.index(k);
        core::array::from_fn(|a| {
            if a < self.n {
                self.frequency(idx[a])
            } else {
                0.0
            }
        })
    }

    /// Fourth-order centered derivative along `axis` of lattice data that
    /// vanishes near the box faces.
    pub fn derivative(&self, data: &[f64], k: usize, axis: usize) -> f64 {
        let idx = self.index(k);
        let at = |off: isize| -> f64 {
            let j = idx[axis] as isize + off;
            if j < 0 || j >= self.count as isize {
                return 0.0;
            }
            let mut m = idx;
            m[axis] = j as usize;
            data[self.flat(&m)]
        };
        (8.0 * (at(1) - at(-1)) - (at(2) - at(-2))) / (12.0 * self.spacing())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_round_trip() {
        let l = Lattice::new(3, 5, 1.5);
        for k in 0..l.len() {
            assert_eq!(l.flat(&l.index(k)), k);
        }
        assert_eq!(l.point(0), [-1.5, -1.5, -1.5]);
    }

    #[test]
    fn derivative_of_quadratic_inside() {
        let l = Lattice::new(2, 32, 1.5);
        let data: Vec<f64> = l.points().iter().map(|x| x[0] * x[0] * x[1]).collect();
        let k = l.flat(&[16, 20, 0]);
        let x = l.point(k);
        assert!((l.derivative(&data, k, 0) - 2.0 * x[0] * x[1]).abs() < 1e-12);
        assert!((l.derivative(&data, k, 1) - x[0] * x[0]).abs() < 1e-12);
    }
}
