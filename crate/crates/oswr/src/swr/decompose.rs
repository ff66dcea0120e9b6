use crate::error::{Error, Result};
use crate::problem::GridSpec;

/// Side of a subdomain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Edge {
    West,
    East,
    South,
    North,
}

impl Edge {
    pub const ALL: [Edge; 4] = [Edge::West, Edge::East, Edge::South, Edge::North];

    /// Vertical edges have an x-normal.
    pub fn is_vertical(self) -> bool {
        matches!(self, Edge::West | Edge::East)
    }
}

/// Interface nodes of one subdomain lying in the closure of one neighbour's
/// unextended block.
#[derive(Clone, Debug, PartialEq)]
pub struct InterfaceDesc {
    pub edge: Edge,
    pub neighbor: usize,
    pub nodes: Vec<(usize, usize)>,
}

/// One extended subdomain. Node ranges are inclusive global indices.
#[derive(Clone, Debug, PartialEq)]
pub struct Subdomain {
    /// Block position (column along x, row along y).
    pub block: (usize, usize),
    pub owned_x: (usize, usize),
    pub owned_y: (usize, usize),
    pub ext_x: (usize, usize),
    pub ext_y: (usize, usize),
    pub interfaces: Vec<InterfaceDesc>,
}

impl Subdomain {
    pub fn contains(&self, (i, j): (usize, usize)) -> bool {
        (self.ext_x.0..=self.ext_x.1).contains(&i) && (self.ext_y.0..=self.ext_y.1).contains(&j)
    }

    pub fn owns(&self, (i, j): (usize, usize)) -> bool {
        (self.owned_x.0..=self.owned_x.1).contains(&i) && (self.owned_y.0..=self.owned_y.1).contains(&j)
    }

    pub fn width(&self) -> usize {
        self.ext_x.1 - self.ext_x.0 + 1
    }

    pub fn height(&self) -> usize {
        self.ext_y.1 - self.ext_y.0 + 1
    }

    /// Index of a global node in the local extended grid.
    pub fn local(&self, (i, j): (usize, usize)) -> usize {
        (i - self.ext_x.0) * self.height() + (j - self.ext_y.0)
    }

    /// True when `edge` lies on the outer boundary of the rectangle.
    pub fn is_outer(&self, edge: Edge, nx: usize, ny: usize) -> bool {
        match edge {
            Edge::West => self.ext_x.0 == 0,
            Edge::East => self.ext_x.1 == nx,
            Edge::South => self.ext_y.0 == 0,
            Edge::North => self.ext_y.1 == ny,
        }
    }
}

/// Partition of the node grid into `px * py` blocks, each enlarged into its
/// neighbours so that adjacent blocks overlap by `overlap_cells` cells.
#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition {
    pub px: usize,
    pub py: usize,
    pub overlap_cells: usize,
    /// Cells along x and y.
    pub nx: usize,
    pub ny: usize,
    /// Ordered with `block.0 * py + block.1`.
    pub subdomains: Vec<Subdomain>,
    /// Nodes lying on both a vertical and a horizontal interface.
    pub cross_points: Vec<(usize, usize)>,
}

/// Splits an overlap of `ov` cells between the lower and upper neighbour.
fn split(ov: usize) -> (usize, usize) {
    (ov.div_ceil(2), ov / 2)
}

pub fn decompose(grid: &GridSpec, px: usize, py: usize, overlap_cells: usize) -> Result<Decomposition> {
    decompose_cells(grid.nx()?, grid.ny()?, px, py, overlap_cells)
}

/// Same as [`decompose`] for explicit cell counts.
pub fn decompose_cells(nx: usize, ny: usize, px: usize, py: usize, overlap_cells: usize) -> Result<Decomposition> {
    if px == 0 || py == 0 {
        return Err(Error::InvalidDecomposition("need at least one subdomain per axis".into()));
    }
    if nx % px != 0 || ny % py != 0 {
        return Err(Error::InvalidDecomposition(format!("{nx}x{ny} cells are not divisible into {px}x{py} blocks")));
    }
    let (cx, cy) = (nx / px, ny / py);
    let (up, down) = split(overlap_cells);
    if (px > 1 && up + down >= cx) || (py > 1 && up + down >= cy) || (overlap_cells > 0 && (cx < 2 || cy < 2)) {
        return Err(Error::InvalidDecomposition(format!(
            "overlap of {overlap_cells} cells too wide for {cx}x{cy}-cell blocks"
        )));
    }
    let range = |a: usize, c: usize, p: usize, n: usize| {
        let owned = (a * c, (a + 1) * c);
        let lo = if a > 0 { owned.0 - down } else { 0 };
        let hi = if a + 1 < p { (owned.1 + up).min(n) } else { n };
        (owned, (lo, hi))
    };
    let mut subs = Vec::with_capacity(px * py);
    for a in 0..px {
        for b in 0..py {
            let (owned_x, ext_x) = range(a, cx, px, nx);
            let (owned_y, ext_y) = range(b, cy, py, ny);
            subs.push(Subdomain { block: (a, b), owned_x, owned_y, ext_x, ext_y, interfaces: Vec::new() });
        }
    }
    for k in 0..subs.len() {
        let s = subs[k].clone();
        let mut ifaces = Vec::new();
        for edge in Edge::ALL {
            if s.is_outer(edge, nx, ny) {
                continue;
            }
            let nodes: Vec<(usize, usize)> = match edge {
                Edge::West => (s.ext_y.0..=s.ext_y.1).map(|j| (s.ext_x.0, j)).collect(),
                Edge::East => (s.ext_y.0..=s.ext_y.1).map(|j| (s.ext_x.1, j)).collect(),
                Edge::South => (s.ext_x.0..=s.ext_x.1).map(|i| (i, s.ext_y.0)).collect(),
                Edge::North => (s.ext_x.0..=s.ext_x.1).map(|i| (i, s.ext_y.1)).collect(),
            };
            let interior = |&(i, j): &(usize, usize)| i > 0 && i < nx && j > 0 && j < ny;
            for (n, other) in subs.iter().enumerate() {
                if n == k {
                    continue;
                }
                let mine: Vec<_> = nodes.iter().copied().filter(interior).filter(|&v| other.owns(v)).collect();
                if !mine.is_empty() {
                    ifaces.push(InterfaceDesc { edge, neighbor: n, nodes: mine });
                }
            }
        }
        subs[k].interfaces = ifaces;
    }
    let mut vertical = std::collections::BTreeSet::new();
    let mut horizontal = std::collections::BTreeSet::new();
    for s in &subs {
        for f in &s.interfaces {
            let set = if f.edge.is_vertical() { &mut vertical } else { &mut horizontal };
            set.extend(f.nodes.iter().copied());
        }
    }
    let cross_points = vertical.intersection(&horizontal).copied().collect();
    Ok(Decomposition { px, py, overlap_cells, nx, ny, subdomains: subs, cross_points })
}

impl Decomposition {
    /// Physical overlap width for mesh size `h`.
    pub fn overlap(&self, h: f64) -> f64 {
        self.overlap_cells as f64 * h
    }

    /// Subdomains whose extended closure contains node `v`.
    pub fn containing(&self, v: (usize, usize)) -> impl Iterator<Item = usize> + '_ {
        self.subdomains.iter().enumerate().filter(move |(_, s)| s.contains(v)).map(|(k, _)| k)
    }
}
