//! Fixed-radius neighbor search over periodic and bounded boxes.
//!
//! Three interchangeable strategies built on one cell list, plus an O(N^2)
//! brute-force oracle:
//!
//! * [`neighbor_pairs_vectorized`] considers the full `N * cand` candidate
//!   table in one sweep before pruning by distance.
//! * [`neighbor_pairs_chunked`] partitions the particles into `M` chunks and
//!   prunes per chunk, bounding the peak candidate buffer by
//!   `ceil(N/M) * cand`.
//! * [`padded_neighbor_pairs`] handles variable particle counts by padding to
//!   a fixed `max_n` / `max_edges` shape with a sentinel index.
//!
//! All strategies return the same canonicalized edge set (sorted by sender,
//! then receiver); every in-range ordered pair `(i, j)`, `i != j`, appears
//! exactly once per direction. Edge displacements follow the convention
//! `d = position[receiver] - position[sender]` (minimum image).

use ndarray::Array2;

use crate::domain::{Domain, MAX_DIM};
use crate::error::{Result, SphError};

/// Sentinel marking an empty slot in the cell occupancy table.
#[inline]
fn slot_sentinel(n: usize) -> u32 {
    n as u32
}

/// Uniform grid over the domain with fixed-capacity cell occupancy lists.
#[derive(Debug, Clone)]
pub struct CellList {
    dim: usize,
    n: usize,
    cutoff: f64,
    grid_dims: [usize; MAX_DIM],
    cell_size: [f64; MAX_DIM],
    origin: [f64; MAX_DIM],
    /// Cell index of each particle (the per-particle map `h`).
    pub particle_cells: Vec<u32>,
    /// Flattened `[n_cells * capacity]` occupancy table; empty slots hold `n`.
    pub slots: Vec<u32>,
    /// Occupants per cell (actual, may exceed `capacity` when overflowed).
    pub counts: Vec<u32>,
    pub capacity: usize,
    /// Set iff some cell exceeded `capacity`; query results are then invalid.
    pub overflow: bool,
    periodic_axis: [bool; MAX_DIM],
}

impl CellList {
    #[inline]
    pub fn n_cells(&self) -> usize {
        self.grid_dims[..self.dim].iter().product()
    }

    #[inline]
    pub fn n_particles(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    #[inline]
    pub fn grid_dims(&self) -> &[usize] {
        &self.grid_dims[..self.dim]
    }

    /// Candidate slots per particle: `3^dim * capacity`.
    pub fn candidates_per_particle(&self) -> usize {
        3usize.pow(self.dim as u32) * self.capacity
    }

    /// Total candidate-slot count `N * cand` of the vectorized strategy's
    /// intermediate buffer.
    pub fn candidate_slots(&self) -> usize {
        self.n * self.candidates_per_particle()
    }

    /// Occupied candidate entries summed over all particles, self excluded.
    /// The denominator of the pruning-ratio diagnostic.
    pub fn real_candidates(&self) -> usize {
        let mut total = 0usize;
        let mut stencil = StencilBuf::default();
        for &cell in &self.particle_cells {
            self.stencil_cells(cell as usize, &mut stencil);
            let around: u32 = stencil.cells().iter().map(|&c| self.counts[c]).sum();
            total += around.saturating_sub(1) as usize;
        }
        total
    }

    #[inline]
    fn cell_of_position(&self, pos: &[f64], domain: &Domain) -> usize {
        let mut idx = 0usize;
        for k in (0..self.dim).rev() {
            let x = domain.wrap_component(pos[k], k);
            let mut c = ((x - self.origin[k]) / self.cell_size[k]).floor() as isize;
            c = c.clamp(0, self.grid_dims[k] as isize - 1);
            idx = idx * self.grid_dims[k] + c as usize;
        }
        idx
    }

    #[inline]
    fn decompose(&self, mut cell: usize) -> [usize; MAX_DIM] {
        let mut coords = [0usize; MAX_DIM];
        for k in 0..self.dim {
            coords[k] = cell % self.grid_dims[k];
            cell /= self.grid_dims[k];
        }
        coords
    }

    /// Collect the (up to 3^dim) cells adjacent to `cell`, including itself,
    /// wrapping on periodic axes and skipping out-of-range cells otherwise.
    fn stencil_cells(&self, cell: usize, buf: &mut StencilBuf) {
        buf.len = 0;
        let coords = self.decompose(cell);
        let mut per_axis: [[isize; 3]; MAX_DIM] = [[0; 3]; MAX_DIM];
        let mut axis_counts = [0usize; MAX_DIM];
        for k in 0..self.dim {
            let nc = self.grid_dims[k] as isize;
            let c = coords[k] as isize;
            let mut cnt = 0;
            for off in [-1isize, 0, 1] {
                let mut v = c + off;
                if self.periodic_axis[k] {
                    if v < 0 {
                        v += nc;
                    } else if v >= nc {
                        v -= nc;
                    }
                } else if v < 0 || v >= nc {
                    continue;
                }
                // A 1- or 2-cell axis can alias offsets onto the same cell.
                if per_axis[k][..cnt].contains(&v) {
                    continue;
                }
                per_axis[k][cnt] = v;
                cnt += 1;
            }
            axis_counts[k] = cnt;
        }
        let mut combo = [0usize; MAX_DIM];
        loop {
            let mut idx = 0usize;
            for k in (0..self.dim).rev() {
                idx = idx * self.grid_dims[k] + per_axis[k][combo[k]] as usize;
            }
            buf.push(idx);
            // odometer over axis combinations
            let mut k = 0;
            loop {
                if k == self.dim {
                    return;
                }
                combo[k] += 1;
                if combo[k] < axis_counts[k] {
                    break;
                }
                combo[k] = 0;
                k += 1;
            }
        }
    }
}

/// Scratch holding a cell stencil (at most 27 entries).
#[derive(Default)]
struct StencilBuf {
    cells: [usize; 27],
    len: usize,
}

impl StencilBuf {
    #[inline]
    fn push(&mut self, c: usize) {
        self.cells[self.len] = c;
        self.len += 1;
    }

    #[inline]
    fn cells(&self) -> &[usize] {
        &self.cells[..self.len]
    }
}

/// Build a cell list with cell size >= `cutoff` per axis.
///
/// On periodic axes the cutoff must not exceed a third of the extent (at
/// least 3 cells per axis), otherwise a configuration error is returned.
/// With `capacity = None` the default `ceil(1.25 * expected occupancy)` is
/// used and the list is automatically rebuilt with the observed maximum
/// occupancy on overflow; an explicit capacity is honored as-is, with the
/// overflow flag reporting saturation.
pub fn build_cell_list(
    positions: &Array2<f64>,
    domain: &Domain,
    cutoff: f64,
    capacity: Option<usize>,
) -> Result<CellList> {
    if !(cutoff > 0.0) || !cutoff.is_finite() {
        return Err(SphError::Config(format!(
            "neighbor cutoff must be positive and finite, got {cutoff}"
        )));
    }
    let dim = domain.dim();
    if positions.ncols() != dim && positions.nrows() > 0 {
        return Err(SphError::DimensionMismatch {
            expected: dim,
            got: positions.ncols(),
        });
    }
    let n = positions.nrows();

    let mut grid_dims = [1usize; MAX_DIM];
    let mut cell_size = [cutoff; MAX_DIM];
    let mut origin = [0.0f64; MAX_DIM];
    let mut periodic_axis = [false; MAX_DIM];
    for k in 0..dim {
        periodic_axis[k] = domain.is_periodic(k);
        if domain.is_periodic(k) {
            let ext = domain.extent(k);
            let nc = (ext / cutoff).floor() as usize;
            if nc < 3 {
                return Err(SphError::Config(format!(
                    "cutoff {cutoff} too large for periodic extent {ext} on axis {k}: \
                     need at least 3 cells"
                )));
            }
            grid_dims[k] = nc;
            cell_size[k] = ext / nc as f64;
            origin[k] = 0.0;
        } else {
            // Cover the observed span; positions may lie outside the box on
            // non-periodic axes.
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for row in positions.outer_iter() {
                lo = lo.min(row[k]);
                hi = hi.max(row[k]);
            }
            if n == 0 || !lo.is_finite() || !hi.is_finite() {
                lo = 0.0;
                hi = domain.extent(k);
            }
            let span = (hi - lo).max(cutoff);
            let nc = ((span / cutoff).floor() as usize).max(1);
            grid_dims[k] = nc;
            cell_size[k] = span / nc as f64 * (1.0 + 1e-12);
            origin[k] = lo;
        }
    }

    let n_cells: usize = grid_dims[..dim].iter().product();
    let default_cap = || {
        let expected = n as f64 / n_cells as f64;
        ((1.25 * expected).ceil() as usize).max(1)
    };
    let mut cap = capacity.unwrap_or_else(default_cap);

    loop {
        let mut list = CellList {
            dim,
            n,
            cutoff,
            grid_dims,
            cell_size,
            origin,
            particle_cells: vec![0; n],
            slots: vec![slot_sentinel(n); n_cells * cap],
            counts: vec![0; n_cells],
            capacity: cap,
            overflow: false,
            periodic_axis,
        };
        for (i, row) in positions.outer_iter().enumerate() {
            let cell = list.cell_of_position(row.as_slice().expect("contiguous row"), domain);
            list.particle_cells[i] = cell as u32;
            let c = list.counts[cell] as usize;
            if c < cap {
                list.slots[cell * cap + c] = i as u32;
            } else {
                list.overflow = true;
            }
            list.counts[cell] += 1;
        }
        if list.overflow && capacity.is_none() {
            cap = list.counts.iter().copied().max().unwrap_or(1) as usize;
            continue;
        }
        return Ok(list);
    }
}

/// Directed edge set within a cutoff radius.
#[derive(Debug, Clone, Default)]
pub struct EdgeSet {
    pub senders: Vec<u32>,
    pub receivers: Vec<u32>,
    /// Minimum-image `position[receiver] - position[sender]`, zero-padded to 3.
    pub displacements: Vec<[f64; MAX_DIM]>,
    pub distances: Vec<f64>,
    pub dim: usize,
}

impl EdgeSet {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            ..Default::default()
        }
    }

    pub fn with_capacity(dim: usize, cap: usize) -> Self {
        Self {
            senders: Vec::with_capacity(cap),
            receivers: Vec::with_capacity(cap),
            displacements: Vec::with_capacity(cap),
            distances: Vec::with_capacity(cap),
            dim,
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.senders.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.senders.is_empty()
    }

    #[inline]
    fn push(&mut self, sender: u32, receiver: u32, disp: [f64; MAX_DIM], dist: f64) {
        self.senders.push(sender);
        self.receivers.push(receiver);
        self.displacements.push(disp);
        self.distances.push(dist);
    }

    /// Sort edges by (sender, receiver) so strategy outputs are comparable.
    pub fn canonicalize(&mut self) {
        let mut order: Vec<u32> = (0..self.len() as u32).collect();
        order.sort_unstable_by_key(|&e| (self.senders[e as usize], self.receivers[e as usize]));
        self.permute(&order);
    }

    fn permute(&mut self, order: &[u32]) {
        let take =
            |src: &mut Vec<u32>| -> Vec<u32> { order.iter().map(|&e| src[e as usize]).collect() };
        self.senders = take(&mut self.senders);
        self.receivers = take(&mut self.receivers);
        self.displacements = order
            .iter()
            .map(|&e| self.displacements[e as usize])
            .collect();
        self.distances = order.iter().map(|&e| self.distances[e as usize]).collect();
    }

    /// Iterate `(sender, receiver)` pairs.
    pub fn pairs(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.senders
            .iter()
            .copied()
            .zip(self.receivers.iter().copied())
    }

    /// CSR view grouped by receiver: `(offsets, edge_indices)` where the
    /// edges of receiver `i` are `edge_indices[offsets[i]..offsets[i+1]]`.
    /// Built with a stable counting sort, so per-receiver edge order is the
    /// canonical sender order.
    pub fn receiver_csr(&self, n: usize) -> (Vec<u32>, Vec<u32>) {
        let mut offsets = vec![0u32; n + 1];
        for &r in &self.receivers {
            offsets[r as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let mut cursor: Vec<u32> = offsets[..n].to_vec();
        let mut order = vec![0u32; self.len()];
        for (e, &r) in self.receivers.iter().enumerate() {
            let slot = cursor[r as usize];
            order[slot as usize] = e as u32;
            cursor[r as usize] += 1;
        }
        (offsets, order)
    }
}

#[inline]
fn displacement_within(
    domain: &Domain,
    dim: usize,
    pos: &[f64],
    i: usize,
    j: usize,
    cutoff_sq: f64,
) -> Option<([f64; MAX_DIM], f64)> {
    let mut d = [0.0; MAX_DIM];
    let mut r2 = 0.0;
    for k in 0..dim {
        let c = domain.displacement_component_wrapped(pos[i * dim + k] - pos[j * dim + k], k);
        d[k] = c;
        r2 += c * c;
    }
    if r2 <= cutoff_sq && r2 > 0.0 {
        Some((d, r2.sqrt()))
    } else {
        None
    }
}

fn collect_range(
    cell_list: &CellList,
    positions: &Array2<f64>,
    domain: &Domain,
    cutoff: f64,
    range: std::ops::Range<usize>,
    out: &mut EdgeSet,
) {
    let dim = cell_list.dim;
    let pos = positions.as_slice().expect("positions must be contiguous");
    let cutoff_sq = cutoff * cutoff;
    let cap = cell_list.capacity;
    let sentinel = slot_sentinel(cell_list.n);
    let mut stencil = StencilBuf::default();
    for i in range {
        let cell = cell_list.particle_cells[i] as usize;
        cell_list.stencil_cells(cell, &mut stencil);
        for &c in stencil.cells() {
            let base = c * cap;
            for slot in 0..cap {
                let j = cell_list.slots[base + slot];
                if j == sentinel {
                    break;
                }
                let j = j as usize;
                if j == i {
                    continue;
                }
                if let Some((d, r)) = displacement_within(domain, dim, pos, i, j, cutoff_sq) {
                    out.push(j as u32, i as u32, d, r);
                }
            }
        }
    }
}

/// Receiver-grouped pair collection without edge payloads or sorting: the
/// per-receiver sweep already emits edges grouped by ascending receiver, so
/// the result is CSR-ready. The solver's rebuild path; the pruning checks
/// are identical to [`neighbor_pairs_vectorized`].
pub(crate) fn collect_pairs_csr(
    cell_list: &CellList,
    positions: &Array2<f64>,
    domain: &Domain,
    cutoff: f64,
) -> Result<(Vec<u32>, Vec<u32>, Vec<u32>)> {
    if cell_list.overflow {
        return Err(SphError::NeighborOverflow);
    }
    let n = cell_list.n;
    let dim = cell_list.dim;
    let cutoff_sq = cutoff * cutoff;
    let cap = cell_list.capacity;
    let sentinel = slot_sentinel(n);
    let mut offsets = Vec::with_capacity(n + 1);
    let mut senders: Vec<u32> = Vec::with_capacity(n * 16);
    let mut receivers: Vec<u32> = Vec::with_capacity(n * 16);
    offsets.push(0u32);
    if n == 0 {
        return Ok((offsets, senders, receivers));
    }
    let pos = positions.as_slice().expect("positions must be contiguous");
    let mut stencil = StencilBuf::default();
    for i in 0..n {
        let cell = cell_list.particle_cells[i] as usize;
        cell_list.stencil_cells(cell, &mut stencil);
        for &c in stencil.cells() {
            let base = c * cap;
            for slot in 0..cap {
                let j = cell_list.slots[base + slot];
                if j == sentinel {
                    break;
                }
                let j = j as usize;
                if j == i {
                    continue;
                }
                let mut r2 = 0.0;
                for k in 0..dim {
                    let c = domain
                        .displacement_component_wrapped(pos[i * dim + k] - pos[j * dim + k], k);
                    r2 += c * c;
                }
                if r2 <= cutoff_sq && r2 > 0.0 {
                    senders.push(j as u32);
                    receivers.push(i as u32);
                }
            }
        }
        offsets.push(senders.len() as u32);
    }
    Ok((offsets, senders, receivers))
}

/// Exact fixed-radius graph from the full `N * cand` candidate sweep.
pub fn neighbor_pairs_vectorized(
    cell_list: &CellList,
    positions: &Array2<f64>,
    domain: &Domain,
    cutoff: f64,
) -> Result<EdgeSet> {
    if cell_list.overflow {
        return Err(SphError::NeighborOverflow);
    }
    let n = cell_list.n;
    let mut edges = EdgeSet::with_capacity(cell_list.dim, n * 8);
    collect_range(cell_list, positions, domain, cutoff, 0..n, &mut edges);
    edges.canonicalize();
    Ok(edges)
}

/// Identical edge set to [`neighbor_pairs_vectorized`], computed over `chunks`
/// particle partitions so the peak candidate buffer is `ceil(N/M) * cand`
/// plus the already-pruned edges.
pub fn neighbor_pairs_chunked(
    cell_list: &CellList,
    positions: &Array2<f64>,
    domain: &Domain,
    cutoff: f64,
    chunks: usize,
) -> Result<EdgeSet> {
    if cell_list.overflow {
        return Err(SphError::NeighborOverflow);
    }
    let n_cells = cell_list.n_cells();
    if chunks == 0 || chunks > n_cells {
        return Err(SphError::Config(format!(
            "chunk count must be in 1..={n_cells}, got {chunks}"
        )));
    }
    let n = cell_list.n;
    let chunk_len = n.div_ceil(chunks.max(1)).max(1);
    let mut edges = EdgeSet::with_capacity(cell_list.dim, n * 8);
    let mut start = 0usize;
    while start < n {
        let end = (start + chunk_len).min(n);
        collect_range(cell_list, positions, domain, cutoff, start..end, &mut edges);
        start = end;
    }
    edges.canonicalize();
    Ok(edges)
}

/// Chunk count targeting a candidate buffer of at most 2^20 slot entries.
pub fn default_chunk_count(cell_list: &CellList) -> usize {
    const TARGET: usize = 1 << 20;
    let cand = cell_list.candidates_per_particle().max(1);
    let per_chunk = (TARGET / cand).max(1);
    cell_list
        .n_particles()
        .div_ceil(per_chunk)
        .clamp(1, cell_list.n_cells())
}

/// O(N^2) all-pairs reference; the oracle the cell-list strategies are
/// checked against.
pub fn neighbor_pairs_bruteforce(positions: &Array2<f64>, domain: &Domain, cutoff: f64) -> EdgeSet {
    let n = positions.nrows();
    let dim = domain.dim();
    let mut edges = EdgeSet::new(dim);
    if n == 0 {
        return edges;
    }
    let pos = positions.as_slice().expect("positions must be contiguous");
    let cutoff_sq = cutoff * cutoff;
    for s in 0..n {
        for r in 0..n {
            if s == r {
                continue;
            }
            if let Some((d, dist)) = displacement_within(domain, dim, pos, r, s, cutoff_sq) {
                edges.push(s as u32, r as u32, d, dist);
            }
        }
    }
    edges.canonicalize();
    edges
}

/// Edge set padded to a fixed shape for variable particle counts.
#[derive(Debug, Clone)]
pub struct PaddedEdgeSet {
    /// Edge arrays of length `max_edges`; rows beyond `n_real` hold the
    /// sentinel pair `(max_n, max_n)` with zero displacement.
    pub edges: EdgeSet,
    pub n_real: usize,
    pub sentinel: u32,
}

impl PaddedEdgeSet {
    /// Strip sentinel rows, leaving the real edge set.
    pub fn real(&self) -> EdgeSet {
        let mut out = EdgeSet::with_capacity(self.edges.dim, self.n_real);
        for e in 0..self.n_real {
            out.push(
                self.edges.senders[e],
                self.edges.receivers[e],
                self.edges.displacements[e],
                self.edges.distances[e],
            );
        }
        out
    }
}

/// Neighbor pairs for a system of `positions.nrows() <= max_n` particles,
/// padded to exactly `max_edges` rows with the sentinel index `max_n`.
pub fn padded_neighbor_pairs(
    positions: &Array2<f64>,
    max_n: usize,
    domain: &Domain,
    cutoff: f64,
    max_edges: usize,
) -> Result<PaddedEdgeSet> {
    let n = positions.nrows();
    if n > max_n {
        return Err(SphError::CapacityExceeded {
            what: "particles",
            got: n,
            limit: max_n,
        });
    }
    let cell_list = build_cell_list(positions, domain, cutoff, None)?;
    let mut edges = neighbor_pairs_vectorized(&cell_list, positions, domain, cutoff)?;
    let n_real = edges.len();
    if n_real > max_edges {
        return Err(SphError::CapacityExceeded {
            what: "edges",
            got: n_real,
            limit: max_edges,
        });
    }
    let sentinel = max_n as u32;
    while edges.len() < max_edges {
        edges.push(sentinel, sentinel, [0.0; MAX_DIM], 0.0);
    }
    Ok(PaddedEdgeSet {
        edges,
        n_real,
        sentinel,
    })
}
