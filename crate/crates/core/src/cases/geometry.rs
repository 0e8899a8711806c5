//! Lattice and wall-slab particle placement shared by the case constructors.

use ndarray::Array2;
use rand::Rng;

/// Particle rows accumulated while building a case.
#[derive(Debug, Default)]
pub struct Placement {
    pub positions: Vec<f64>,
    pub dim: usize,
}

impl Placement {
    pub fn new(dim: usize) -> Self {
        Self {
            positions: Vec::new(),
            dim,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len() / self.dim
    }

    pub fn push(&mut self, p: &[f64]) {
        debug_assert_eq!(p.len(), self.dim);
        self.positions.extend_from_slice(p);
    }

    /// Cell-centered lattice: `cells[k]` points per axis at pitch `dx`,
    /// starting at `origin + dx/2`. Iterates the last axis fastest.
    pub fn lattice(&mut self, origin: &[f64], cells: &[usize], dx: f64) {
        let dim = self.dim;
        debug_assert_eq!(origin.len(), dim);
        debug_assert_eq!(cells.len(), dim);
        let mut idx = vec![0usize; dim];
        'outer: loop {
            let mut p = [0.0f64; 3];
            for k in 0..dim {
                p[k] = origin[k] + (idx[k] as f64 + 0.5) * dx;
            }
            self.push(&p[..dim]);
            let mut k = dim;
            loop {
                if k == 0 {
                    break 'outer;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < cells[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
    }

    /// `n` uniform random points in the box `[origin, origin + size)`.
    pub fn random_uniform<R: Rng>(&mut self, origin: &[f64], size: &[f64], n: usize, rng: &mut R) {
        let dim = self.dim;
        for _ in 0..n {
            let mut p = [0.0f64; 3];
            for k in 0..dim {
                p[k] = origin[k] + rng.gen::<f64>() * size[k];
            }
            self.push(&p[..dim]);
        }
    }

    pub fn into_array(self) -> Array2<f64> {
        let n = self.len();
        Array2::from_shape_vec((n, self.dim), self.positions).expect("row-major placement")
    }
}

/// Number of lattice sites of pitch `dx` that fit in a span, with a small
/// tolerance so exact multiples are not lost to roundoff.
pub fn sites_in_span(span: f64, dx: f64) -> usize {
    ((span / dx) + 1e-9).floor() as usize
}
