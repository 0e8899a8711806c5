//! Receiver-grouped neighbor structure and per-edge geometry shared by the
//! solver passes.
//!
//! The pair list is rebuilt only when accumulated particle motion exceeds the
//! Verlet skin, but the per-edge displacements, distances, and kernel values
//! are refreshed every step from the current positions. Edges in the skin
//! band (beyond the kernel support) contribute exactly zero to every sum, so
//! the stale pair list stays physically exact.

use ndarray::Array2;
use rayon::prelude::*;

use crate::domain::{Domain, MAX_DIM};
use crate::kernel::QuinticKernel;
use crate::neighbors::EdgeSet;

/// CSR pair list grouped by receiver.
#[derive(Debug, Clone, Default)]
pub struct Neighborhood {
    /// `[n + 1]` offsets into the edge arrays.
    pub offsets: Vec<u32>,
    /// Sender index per edge, grouped by receiver.
    pub senders: Vec<u32>,
    /// Receiver index per edge (redundant with `offsets`, kept for
    /// edge-parallel sweeps).
    pub receivers: Vec<u32>,
    pub n: usize,
    pub dim: usize,
}

impl Neighborhood {
    pub fn from_edges(edges: &EdgeSet, n: usize) -> Self {
        let (offsets, order) = edges.receiver_csr(n);
        let senders: Vec<u32> = order.iter().map(|&e| edges.senders[e as usize]).collect();
        let receivers: Vec<u32> = order.iter().map(|&e| edges.receivers[e as usize]).collect();
        Self {
            offsets,
            senders,
            receivers,
            n,
            dim: edges.dim,
        }
    }

    #[inline]
    pub fn n_edges(&self) -> usize {
        self.senders.len()
    }

    /// Edge index range of receiver `i`.
    #[inline]
    pub fn edges_of(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i] as usize..self.offsets[i + 1] as usize
    }
}

/// Per-edge geometry, recomputed every step from current positions. Struct of
/// arrays: each pass streams only the fields it reads.
#[derive(Debug, Clone, Default)]
pub struct EdgeGeometry {
    /// Minimum-image `position[receiver] - position[sender]`.
    pub disp: Vec<[f64; MAX_DIM]>,
    pub dist: Vec<f64>,
    pub w: Vec<f64>,
    pub dwdr: Vec<f64>,
}

impl EdgeGeometry {
    pub fn refresh(
        &mut self,
        nbh: &Neighborhood,
        positions: &Array2<f64>,
        domain: &Domain,
        kernel: &QuinticKernel,
    ) {
        let dim = nbh.dim;
        let n_edges = nbh.n_edges();
        let pos = positions.as_slice().expect("positions must be contiguous");
        self.disp.resize(n_edges, [0.0; MAX_DIM]);
        self.dist.resize(n_edges, 0.0);
        self.w.resize(n_edges, 0.0);
        self.dwdr.resize(n_edges, 0.0);

        self.disp
            .par_iter_mut()
            .zip(self.dist.par_iter_mut())
            .zip(self.w.par_iter_mut().zip(self.dwdr.par_iter_mut()))
            .enumerate()
            .for_each(|(e, ((disp, dist), (w, dwdr)))| {
                let i = nbh.receivers[e] as usize;
                let j = nbh.senders[e] as usize;
                let mut d = [0.0; MAX_DIM];
                let mut r2 = 0.0;
                for k in 0..dim {
                    let c = domain
                        .displacement_component_wrapped(pos[i * dim + k] - pos[j * dim + k], k);
                    d[k] = c;
                    r2 += c * c;
                }
                let r = r2.sqrt();
                let (wv, dwv) = kernel.value_and_grad(r);
                *disp = d;
                *dist = r;
                *w = wv;
                *dwdr = dwv;
            });
    }
}
