//! Quadtree meshes of squares over a rectangle, with 1-irregular hanging nodes.
//!
//! Cells are identified by a [`CellKey`] on a global dyadic lattice: the root grid has
//! `nx * ny` squares at level 0 and every refinement halves the side length. A mesh is
//! an immutable set of active keys plus the derived edge structure.

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::scalar::{c, Real};

/// Deepest refinement level the lattice arithmetic supports.
pub const MAX_LEVEL: u8 = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellKey {
    pub level: u8,
    pub i: u32,
    pub j: u32,
}

impl CellKey {
    pub fn new(level: u8, i: u32, j: u32) -> Self {
        CellKey { level, i, j }
    }

    pub fn parent(&self) -> Option<CellKey> {
        if self.level == 0 {
            None
        } else {
            Some(CellKey::new(self.level - 1, self.i / 2, self.j / 2))
        }
    }

    /// Children in the order (0,0), (1,0), (0,1), (1,1).
    pub fn children(&self) -> [CellKey; 4] {
        let l = self.level + 1;
        let (i, j) = (2 * self.i, 2 * self.j);
        [
            CellKey::new(l, i, j),
            CellKey::new(l, i + 1, j),
            CellKey::new(l, i, j + 1),
            CellKey::new(l, i + 1, j + 1),
        ]
    }

    pub fn ancestor_at(&self, level: u8) -> CellKey {
        debug_assert!(level <= self.level);
        let s = self.level - level;
        CellKey::new(level, self.i >> s, self.j >> s)
    }

    pub fn is_ancestor_of(&self, other: &CellKey) -> bool {
        other.level > self.level && other.ancestor_at(self.level) == *self
    }

    /// Lower-left corner and side on the finest lattice.
    pub fn lattice(&self) -> (u64, u64, u64) {
        let s = 1u64 << (MAX_LEVEL - self.level);
        (self.i as u64 * s, self.j as u64 * s, s)
    }

    fn morton(&self) -> u64 {
        let (x, y, _) = self.lattice();
        let mut m = 0u64;
        for b in 0..32 {
            m |= ((x >> b) & 1) << (2 * b);
            m |= ((y >> b) & 1) << (2 * b + 1);
        }
        m
    }
}

/// Sides of a cell or of the domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    West,
    East,
    South,
    North,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::West, Side::East, Side::South, Side::North];

    pub fn normal<T: Real>(self) -> [T; 2] {
        match self {
            Side::West => [-T::one(), T::zero()],
            Side::East => [T::one(), T::zero()],
            Side::South => [T::zero(), -T::one()],
            Side::North => [T::zero(), T::one()],
        }
    }

    fn index(self) -> usize {
        match self {
            Side::West => 0,
            Side::East => 1,
            Side::South => 2,
            Side::North => 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundaryKind {
    Dirichlet,
    Neumann,
}

/// Boundary condition type per side of the rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundarySpec {
    pub sides: [BoundaryKind; 4],
}

impl BoundarySpec {
    pub fn dirichlet() -> Self {
        BoundarySpec { sides: [BoundaryKind::Dirichlet; 4] }
    }

    pub fn kind(&self, side: Side) -> BoundaryKind {
        self.sides[side.index()]
    }

    pub fn with(mut self, side: Side, kind: BoundaryKind) -> Self {
        self.sides[side.index()] = kind;
        self
    }
}

impl Default for BoundarySpec {
    fn default() -> Self {
        Self::dirichlet()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeKind {
    Interior,
    Boundary(Side, BoundaryKind),
    Interface,
}

/// One edge (or fine sub-edge of a nonconforming face).
///
/// The normal points from `minus` to `plus`; on the boundary it is the outward normal
/// of `minus`.
#[derive(Clone, Debug)]
pub struct Edge<T> {
    pub kind: EdgeKind,
    pub minus: usize,
    pub plus: Option<usize>,
    pub normal: [T; 2],
    pub start: [T; 2],
    pub end: [T; 2],
    pub h: T,
    /// Endpoints on the finest lattice.
    pub lattice: [(u64, u64); 2],
}

impl<T: Real> Edge<T> {
    pub fn point(&self, s: T) -> [T; 2] {
        [
            self.start[0] + (self.end[0] - self.start[0]) * s,
            self.start[1] + (self.end[1] - self.start[1]) * s,
        ]
    }

    pub fn midpoint(&self) -> [T; 2] {
        self.point(c(0.5))
    }

    pub fn is_boundary(&self) -> bool {
        matches!(self.kind, EdgeKind::Boundary(..))
    }

    pub fn is_interface(&self) -> bool {
        matches!(self.kind, EdgeKind::Interface)
    }

    pub fn is_interior(&self) -> bool {
        matches!(self.kind, EdgeKind::Interior)
    }

    pub fn is_dirichlet(&self) -> bool {
        matches!(self.kind, EdgeKind::Boundary(_, BoundaryKind::Dirichlet))
    }

    pub fn is_neumann(&self) -> bool {
        matches!(self.kind, EdgeKind::Boundary(_, BoundaryKind::Neumann))
    }
}

/// Root-grid-aligned interface splitting the domain into two labelled subdomains.
#[derive(Clone, Debug)]
pub struct Subdomains {
    /// Label (1 or 2) of every root cell, row-major with `i` fastest.
    pub labels: Vec<u8>,
    /// Interface segments as root-lattice unit edges `((i0, j0), (i1, j1))`.
    pub segments: Vec<((u32, u32), (u32, u32))>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect<T> {
    pub x0: T,
    pub y0: T,
    pub x1: T,
    pub y1: T,
}

impl<T: Real> Rect<T> {
    pub fn new(x0: T, y0: T, x1: T, y1: T) -> Self {
        Rect { x0, y0, x1, y1 }
    }

    pub fn area(&self) -> T {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }
}

/// Element patch, edge patch and cell-boundary vertices of one cell.
#[derive(Clone, Debug, Default)]
pub struct Patch {
    pub cells: Vec<usize>,
    pub edges: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct Mesh<T> {
    domain: Rect<T>,
    nx: u32,
    ny: u32,
    root_h: T,
    boundary: BoundarySpec,
    subdomains: Option<std::sync::Arc<Subdomains>>,
    cells: Vec<CellKey>,
    index: HashMap<CellKey, usize>,
    edges: Vec<Edge<T>>,
    cell_edges: Vec<Vec<usize>>,
    vertex_edges: HashMap<(u64, u64), Vec<usize>>,
}

impl<T: Real> Mesh<T> {
    /// Uniform `nx * ny` grid of squares over `domain`.
    pub fn uniform(domain: Rect<T>, nx: u32, ny: u32) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::Input("root grid must be non-empty".into()));
        }
        let hx = (domain.x1 - domain.x0) / c(nx as f64);
        let hy = (domain.y1 - domain.y0) / c(ny as f64);
        if hx <= T::zero() || ((hx - hy) / hx).abs() > c(1e-12) {
            return Err(Error::Input("root cells must be squares".into()));
        }
        let cells = (0..ny)
            .flat_map(|j| (0..nx).map(move |i| CellKey::new(0, i, j)))
            .collect();
        Ok(Self::build(domain, nx, ny, hx, BoundarySpec::default(), None, cells))
    }

    /// Unit square split into `n * n` cells.
    pub fn unit_square(n: u32) -> Self {
        Self::uniform(Rect::new(T::zero(), T::zero(), T::one(), T::one()), n, n).unwrap()
    }

    pub fn with_boundary(&self, boundary: BoundarySpec) -> Self {
        Self::build(
            self.domain,
            self.nx,
            self.ny,
            self.root_h,
            boundary,
            self.subdomains.clone(),
            self.cells.clone(),
        )
    }

    /// Attaches an interface made of axis-aligned segments. Subdomain 1 is the connected
    /// component of root cells containing `seed`; everything else is subdomain 2.
    pub fn with_interface(&self, segments: &[([T; 2], [T; 2])], seed: [T; 2]) -> Result<Self> {
        let tol = self.root_h * c(1e-9);
        let snap = |v: T, o: T| -> Result<u32> {
            let r = (v - o) / self.root_h;
            let n = r.round();
            if (r - n).abs() * self.root_h > tol || n < T::zero() {
                return Err(Error::Input(format!(
                    "interface vertex {v} does not lie on a root grid line"
                )));
            }
            Ok(n.to_u32().unwrap())
        };
        let mut units = Vec::new();
        for (a, b) in segments {
            let (ia, ja) = (snap(a[0], self.domain.x0)?, snap(a[1], self.domain.y0)?);
            let (ib, jb) = (snap(b[0], self.domain.x0)?, snap(b[1], self.domain.y0)?);
            if ia != ib && ja != jb {
                return Err(Error::Input("interface segments must be axis-aligned".into()));
            }
            if ia.max(ib) > self.nx || ja.max(jb) > self.ny {
                return Err(Error::Input("interface leaves the domain".into()));
            }
            if ia == ib {
                for j in ja.min(jb)..ja.max(jb) {
                    units.push(((ia, j), (ia, j + 1)));
                }
            } else {
                for i in ia.min(ib)..ia.max(ib) {
                    units.push(((i, ja), (i + 1, ja)));
                }
            }
        }
        let blocked: HashSet<_> = units.iter().copied().collect();
        let nx = self.nx;
        let ny = self.ny;
        let si = ((seed[0] - self.domain.x0) / self.root_h).floor().to_i64().unwrap_or(-1);
        let sj = ((seed[1] - self.domain.y0) / self.root_h).floor().to_i64().unwrap_or(-1);
        if si < 0 || sj < 0 || si >= nx as i64 || sj >= ny as i64 {
            return Err(Error::Input("interface seed lies outside the domain".into()));
        }
        let mut labels = vec![2u8; (nx * ny) as usize];
        let mut stack = vec![(si as u32, sj as u32)];
        labels[(sj as u32 * nx + si as u32) as usize] = 1;
        while let Some((i, j)) = stack.pop() {
            let mut visit = |ni: u32, nj: u32, seg: ((u32, u32), (u32, u32))| {
                if !blocked.contains(&seg) && labels[(nj * nx + ni) as usize] == 2 {
                    labels[(nj * nx + ni) as usize] = 1;
                    stack.push((ni, nj));
                }
            };
            if i > 0 {
                visit(i - 1, j, ((i, j), (i, j + 1)));
            }
            if i + 1 < nx {
                visit(i + 1, j, ((i + 1, j), (i + 1, j + 1)));
            }
            if j > 0 {
                visit(i, j - 1, ((i, j), (i + 1, j)));
            }
            if j + 1 < ny {
                visit(i, j + 1, ((i, j + 1), (i + 1, j + 1)));
            }
        }
        if labels.iter().all(|&l| l == 1) {
            return Err(Error::Input("interface does not separate the domain".into()));
        }
        let sub = Subdomains { labels, segments: units };
        Ok(Self::build(
            self.domain,
            self.nx,
            self.ny,
            self.root_h,
            self.boundary,
            Some(std::sync::Arc::new(sub)),
            self.cells.clone(),
        ))
    }

    fn build(
        domain: Rect<T>,
        nx: u32,
        ny: u32,
        root_h: T,
        boundary: BoundarySpec,
        subdomains: Option<std::sync::Arc<Subdomains>>,
        mut cells: Vec<CellKey>,
    ) -> Self {
        cells.sort_by_key(|k| k.morton());
        cells.dedup();
        let index = cells.iter().enumerate().map(|(n, k)| (*k, n)).collect();
        let mut m = Mesh {
            domain,
            nx,
            ny,
            root_h,
            boundary,
            subdomains,
            cells,
            index,
            edges: Vec::new(),
            cell_edges: Vec::new(),
            vertex_edges: HashMap::new(),
        };
        m.build_edges();
        m
    }

    pub fn domain(&self) -> Rect<T> {
        self.domain
    }

    pub fn root_grid(&self) -> (u32, u32) {
        (self.nx, self.ny)
    }

    pub fn boundary(&self) -> BoundarySpec {
        self.boundary
    }

    pub fn has_interface(&self) -> bool {
        self.subdomains.is_some()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn keys(&self) -> &[CellKey] {
        &self.cells
    }

    pub fn key(&self, cell: usize) -> CellKey {
        self.cells[cell]
    }

    pub fn index_of(&self, key: &CellKey) -> Option<usize> {
        self.index.get(key).copied()
    }

    pub fn edges(&self) -> &[Edge<T>] {
        &self.edges
    }

    pub fn cell_edges(&self, cell: usize) -> &[usize] {
        &self.cell_edges[cell]
    }

    pub fn max_level(&self) -> u8 {
        self.cells.iter().map(|k| k.level).max().unwrap_or(0)
    }

    pub fn level_h(&self, level: u8) -> T {
        self.root_h / c((1u64 << level) as f64)
    }

    /// Side length of a cell; used as the cell diameter `h_K`.
    pub fn h(&self, cell: usize) -> T {
        self.level_h(self.cells[cell].level)
    }

    pub fn key_h(&self, key: &CellKey) -> T {
        self.level_h(key.level)
    }

    /// Lower-left corner of a key's square.
    pub fn key_origin(&self, key: &CellKey) -> [T; 2] {
        let h = self.key_h(key);
        [
            self.domain.x0 + h * c(key.i as f64),
            self.domain.y0 + h * c(key.j as f64),
        ]
    }

    pub fn key_center(&self, key: &CellKey) -> [T; 2] {
        let h = self.key_h(key);
        let o = self.key_origin(key);
        [o[0] + h * c(0.5), o[1] + h * c(0.5)]
    }

    pub fn center(&self, cell: usize) -> [T; 2] {
        self.key_center(&self.cells[cell])
    }

    pub fn origin(&self, cell: usize) -> [T; 2] {
        self.key_origin(&self.cells[cell])
    }

    /// Corners in counter-clockwise order starting at the lower-left.
    pub fn corners(&self, cell: usize) -> [[T; 2]; 4] {
        let o = self.origin(cell);
        let h = self.h(cell);
        [[o[0], o[1]], [o[0] + h, o[1]], [o[0] + h, o[1] + h], [o[0], o[1] + h]]
    }

    pub fn lattice_point(&self, p: (u64, u64)) -> [T; 2] {
        let unit = self.level_h(MAX_LEVEL);
        [
            self.domain.x0 + unit * c(p.0 as f64),
            self.domain.y0 + unit * c(p.1 as f64),
        ]
    }

    /// Subdomain label (1 or 2) of a cell, or 1 when there is no interface.
    pub fn subdomain(&self, cell: usize) -> u8 {
        self.key_subdomain(&self.cells[cell])
    }

    pub fn key_subdomain(&self, key: &CellKey) -> u8 {
        match &self.subdomains {
            None => 1,
            Some(s) => {
                let r = key.ancestor_at(0);
                s.labels[(r.j * self.nx + r.i) as usize]
            }
        }
    }

    pub fn subdomains(&self) -> Option<&Subdomains> {
        self.subdomains.as_deref()
    }

    /// Active cell that equals `key` or contains it.
    pub fn locate(&self, key: &CellKey) -> Option<usize> {
        let mut k = *key;
        loop {
            if let Some(&n) = self.index.get(&k) {
                return Some(n);
            }
            k = k.parent()?;
        }
    }

    /// Active cell containing a point (ties resolved towards the upper/right cell).
    pub fn locate_point(&self, x: [T; 2]) -> Option<usize> {
        let d = self.domain;
        if x[0] < d.x0 || x[0] > d.x1 || x[1] < d.y0 || x[1] > d.y1 {
            return None;
        }
        let unit = self.level_h(MAX_LEVEL);
        let maxx = (self.nx as u64) << MAX_LEVEL;
        let maxy = (self.ny as u64) << MAX_LEVEL;
        let lx = (((x[0] - d.x0) / unit).floor().to_u64().unwrap_or(0)).min(maxx - 1);
        let ly = (((x[1] - d.y0) / unit).floor().to_u64().unwrap_or(0)).min(maxy - 1);
        let finest = CellKey::new(MAX_LEVEL, lx as u32, ly as u32);
        self.locate(&finest)
    }

    fn in_domain(&self, key: &CellKey) -> bool {
        let n = 1u32 << key.level;
        key.i < self.nx * n && key.j < self.ny * n
    }

    fn neighbor_key(&self, key: &CellKey, side: Side) -> Option<CellKey> {
        let n = 1u32 << key.level;
        let (i, j) = (key.i, key.j);
        let k = match side {
            Side::West => CellKey::new(key.level, i.checked_sub(1)?, j),
            Side::East => CellKey::new(key.level, i + 1, j),
            Side::South => CellKey::new(key.level, i, j.checked_sub(1)?),
            Side::North => CellKey::new(key.level, i, j + 1),
        };
        if k.i < self.nx * n && k.j < self.ny * n {
            Some(k)
        } else {
            None
        }
    }

    fn build_edges(&mut self) {
        let mut edges = Vec::new();
        let mut cell_edges = vec![Vec::new(); self.cells.len()];
        for (ci, key) in self.cells.iter().enumerate() {
            for side in Side::ALL {
                match self.neighbor_key(key, side) {
                    None => {
                        let kind = EdgeKind::Boundary(side, self.boundary.kind(side));
                        let e = self.make_edge(kind, ci, None, key, side);
                        cell_edges[ci].push(edges.len());
                        edges.push(e);
                    }
                    Some(nk) => {
                        if let Some(&nj) = self.index.get(&nk) {
                            if matches!(side, Side::East | Side::North) {
                                let kind = self.interior_kind(key, &nk);
                                let e = self.make_edge(kind, ci, Some(nj), key, side);
                                cell_edges[ci].push(edges.len());
                                cell_edges[nj].push(edges.len());
                                edges.push(e);
                            }
                        } else if let Some(pk) = nk.parent() {
                            if let Some(&nj) = self.index.get(&pk) {
                                let kind = self.interior_kind(key, &pk);
                                let (m, p) = match side {
                                    Side::East | Side::North => (ci, nj),
                                    _ => (nj, ci),
                                };
                                let e = self.make_edge(kind, m, Some(p), key, side);
                                cell_edges[ci].push(edges.len());
                                cell_edges[nj].push(edges.len());
                                edges.push(e);
                            }
                        }
                    }
                }
            }
        }
        let mut vertex_edges: HashMap<(u64, u64), Vec<usize>> = HashMap::new();
        for (n, e) in edges.iter().enumerate() {
            for p in e.lattice {
                vertex_edges.entry(p).or_default().push(n);
            }
        }
        self.edges = edges;
        self.cell_edges = cell_edges;
        self.vertex_edges = vertex_edges;
    }

    fn interior_kind(&self, a: &CellKey, b: &CellKey) -> EdgeKind {
        if self.key_subdomain(a) != self.key_subdomain(b) {
            EdgeKind::Interface
        } else {
            EdgeKind::Interior
        }
    }

    /// Builds the edge on `side` of `key` (the fine cell for nonconforming faces).
    fn make_edge(
        &self,
        kind: EdgeKind,
        minus: usize,
        plus: Option<usize>,
        key: &CellKey,
        side: Side,
    ) -> Edge<T> {
        let (x, y, s) = key.lattice();
        let (a, b) = match side {
            Side::West => ((x, y), (x, y + s)),
            Side::East => ((x + s, y), (x + s, y + s)),
            Side::South => ((x, y), (x + s, y)),
            Side::North => ((x, y + s), (x + s, y + s)),
        };
        let normal = match (kind, side) {
            (EdgeKind::Boundary(..), _) => side.normal(),
            (_, Side::West | Side::East) => [T::one(), T::zero()],
            _ => [T::zero(), T::one()],
        };
        Edge {
            kind,
            minus,
            plus,
            normal,
            start: self.lattice_point(a),
            end: self.lattice_point(b),
            h: self.key_h(key),
            lattice: [a, b],
        }
    }

    /// Lattice points on the boundary of a cell that are edge endpoints.
    fn boundary_vertices(&self, cell: usize) -> Vec<(u64, u64)> {
        let (x, y, s) = self.cells[cell].lattice();
        let h = s / 2;
        let candidates = [
            (x, y),
            (x + s, y),
            (x + s, y + s),
            (x, y + s),
            (x + h, y),
            (x + s, y + h),
            (x + h, y + s),
            (x, y + h),
        ];
        candidates
            .into_iter()
            .filter(|p| self.vertex_edges.contains_key(p))
            .collect()
    }

    /// Element patch (cells whose closure meets the closure of `cell`) and edge patch
    /// (edges whose closure meets the boundary of `cell`).
    pub fn patch(&self, cell: usize) -> Patch {
        let mut edges: Vec<usize> = self
            .boundary_vertices(cell)
            .iter()
            .flat_map(|p| self.vertex_edges[p].iter().copied())
            .collect();
        edges.sort_unstable();
        edges.dedup();
        let mut cells: Vec<usize> = edges
            .iter()
            .flat_map(|&e| {
                let ed = &self.edges[e];
                std::iter::once(ed.minus).chain(ed.plus)
            })
            .collect();
        cells.push(cell);
        cells.sort_unstable();
        cells.dedup();
        Patch { cells, edges }
    }

    /// Cells whose closure meets the closure of edge `e`.
    pub fn edge_element_patch(&self, e: usize) -> Vec<usize> {
        let ed = &self.edges[e];
        let mut cells: Vec<usize> = ed
            .lattice
            .iter()
            .flat_map(|p| self.vertex_edges[p].iter())
            .flat_map(|&f| {
                let fd = &self.edges[f];
                std::iter::once(fd.minus).chain(fd.plus)
            })
            .collect();
        cells.sort_unstable();
        cells.dedup();
        cells
    }

    /// Splits the listed cells and restores 1-irregularity by closure refinement.
    pub fn refine(&self, ids: &[usize]) -> Result<Self> {
        self.adapt(ids, &[])
    }

    /// Merges sibling quadruples whose four members are all listed, when the merge keeps
    /// the mesh 1-irregular. Other requests are ignored.
    pub fn coarsen(&self, ids: &[usize]) -> Result<Self> {
        self.adapt(&[], ids)
    }

    /// Refinement followed by coarsening of the cells that were not refined.
    pub fn adapt(&self, refine: &[usize], coarsen: &[usize]) -> Result<Self> {
        for &id in refine.iter().chain(coarsen) {
            if id >= self.cells.len() {
                return Err(Error::Input(format!("cell id {id} is not active")));
            }
        }
        let mut active: HashSet<CellKey> = self.cells.iter().copied().collect();
        let mut work = Vec::new();
        for &id in refine {
            let k = self.cells[id];
            if k.level >= MAX_LEVEL - 1 {
                return Err(Error::Input("maximum refinement level reached".into()));
            }
            if active.remove(&k) {
                for ch in k.children() {
                    active.insert(ch);
                    work.push(ch);
                }
            }
        }
        self.close(&mut active, work);

        let flagged: HashSet<CellKey> = coarsen
            .iter()
            .map(|&id| self.cells[id])
            .filter(|k| active.contains(k))
            .collect();
        let mut parents: Vec<CellKey> = flagged.iter().filter_map(|k| k.parent()).collect();
        parents.sort();
        parents.dedup();
        let mut merges = Vec::new();
        for p in parents {
            if p.children().iter().all(|ch| flagged.contains(ch)) && self.can_merge(&active, &p) {
                merges.push(p);
            }
        }
        for p in merges {
            for ch in p.children() {
                active.remove(&ch);
            }
            active.insert(p);
        }
        Ok(Self::build(
            self.domain,
            self.nx,
            self.ny,
            self.root_h,
            self.boundary,
            self.subdomains.clone(),
            active.into_iter().collect(),
        ))
    }

    fn covering(active: &HashSet<CellKey>, key: &CellKey) -> Option<CellKey> {
        let mut k = *key;
        loop {
            if active.contains(&k) {
                return Some(k);
            }
            k = k.parent()?;
        }
    }

    fn close(&self, active: &mut HashSet<CellKey>, mut work: Vec<CellKey>) {
        while let Some(k) = work.pop() {
            if !active.contains(&k) || k.level < 2 {
                continue;
            }
            for side in Side::ALL {
                let Some(nk) = self.neighbor_key(&k, side) else { continue };
                let Some(cov) = Self::covering(active, &nk) else { continue };
                if cov.level + 1 < k.level {
                    active.remove(&cov);
                    for ch in cov.children() {
                        active.insert(ch);
                        work.push(ch);
                    }
                    work.push(k);
                }
            }
        }
    }

    fn can_merge(&self, active: &HashSet<CellKey>, parent: &CellKey) -> bool {
        let ch = parent.children();
        let l = parent.level + 1;
        let probes: [(CellKey, Side); 8] = [
            (ch[0], Side::West),
            (ch[2], Side::West),
            (ch[1], Side::East),
            (ch[3], Side::East),
            (ch[0], Side::South),
            (ch[1], Side::South),
            (ch[2], Side::North),
            (ch[3], Side::North),
        ];
        for (k, side) in probes {
            if let Some(nk) = self.neighbor_key(&k, side) {
                debug_assert_eq!(nk.level, l);
                if Self::covering(active, &nk).is_none() {
                    return false;
                }
            }
        }
        true
    }

    /// Finest common refinement of two meshes over the same root grid.
    pub fn union(&self, other: &Mesh<T>) -> Result<Self> {
        if self.nx != other.nx || self.ny != other.ny || self.domain != other.domain {
            return Err(Error::Input("union of meshes over different roots".into()));
        }
        let mut all: HashSet<CellKey> = self.cells.iter().copied().collect();
        all.extend(other.cells.iter().copied());
        let mut ancestors = HashSet::new();
        for k in &all {
            let mut a = *k;
            while let Some(p) = a.parent() {
                if !ancestors.insert(p) {
                    break;
                }
                a = p;
            }
        }
        let cells: Vec<CellKey> = all.into_iter().filter(|k| !ancestors.contains(k)).collect();
        Ok(Self::build(
            self.domain,
            self.nx,
            self.ny,
            self.root_h,
            self.boundary,
            self.subdomains.clone(),
            cells,
        ))
    }

    /// Same set of active cells.
    pub fn same_cells(&self, other: &Mesh<T>) -> bool {
        self.cells == other.cells
    }

    /// Largest level difference across any edge.
    pub fn max_level_jump(&self) -> u8 {
        self.edges
            .iter()
            .filter_map(|e| {
                let a = self.cells[e.minus].level;
                e.plus.map(|p| a.abs_diff(self.cells[p].level))
            })
            .max()
            .unwrap_or(0)
    }

    pub fn total_area(&self) -> T {
        (0..self.cells.len()).map(|n| self.h(n) * self.h(n)).sum()
    }

    pub fn is_valid_key(&self, key: &CellKey) -> bool {
        self.in_domain(key)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn count(m: &Mesh<f64>) -> (usize, usize, usize) {
        let mut r = (0, 0, 0);
        for e in m.edges() {
            match e.kind {
                EdgeKind::Interior => r.0 += 1,
                EdgeKind::Boundary(..) => r.1 += 1,
                EdgeKind::Interface => r.2 += 1,
            }
        }
        r
    }

    #[test]
    fn edge_counts() {
        let m = Mesh::<f64>::unit_square(1);
        assert_eq!(count(&m), (0, 4, 0));
        assert!(m.edges().iter().all(|e| e.h == 1.0));
        let m = Mesh::<f64>::unit_square(2);
        assert_eq!(count(&m), (4, 8, 0));
        assert!(m.edges().iter().all(|e| e.h == 0.5));
    }

    #[test]
    fn hanging_faces_use_fine_sub_edges() {
        let m = Mesh::<f64>::unit_square(2).refine(&[0]).unwrap();
        // 4 internal to the refined cell, 2 + 2 fine sub-edges on its hanging faces,
        // 2 conforming edges between the remaining coarse cells.
        assert_eq!(count(&m).0, 10);
        assert_eq!(count(&m).1, 10);
    }

    #[test]
    fn closure_forces_neighbour_refinement() {
        let m = Mesh::<f64>::unit_square(2);
        let ll = m.index_of(&CellKey::new(0, 0, 0)).unwrap();
        let m1 = m.refine(&[ll]).unwrap();
        let corner = m1.index_of(&CellKey::new(1, 1, 1)).unwrap();
        let m2 = m1.refine(&[corner]).unwrap();
        assert!(m2.max_level_jump() <= 1);
        assert!(m2.index_of(&CellKey::new(0, 1, 0)).is_none());
        assert!(m2.index_of(&CellKey::new(0, 0, 1)).is_none());
        assert!(m2.index_of(&CellKey::new(0, 1, 1)).is_some());
        assert_eq!(m2.num_cells(), 3 + 4 + 4 + 4 + 1);
    }

    #[test]
    fn patches_contain_own_edges() {
        let m = Mesh::<f64>::unit_square(4).refine(&[5]).unwrap();
        for cell in 0..m.num_cells() {
            let p = m.patch(cell);
            assert!(p.cells.contains(&cell));
            for e in m.cell_edges(cell) {
                assert!(p.edges.contains(e));
            }
        }
    }

    #[test]
    fn interface_labels() {
        let d = Rect::new(-1.0, -1.0, 1.0, 1.0);
        let m = Mesh::<f64>::uniform(d, 4, 4)
            .unwrap()
            .with_interface(&[([0.0, -1.0], [0.0, 1.0])], [-0.5, 0.0])
            .unwrap();
        assert_eq!(count(&m).2, 4);
        for e in m.edges().iter().filter(|e| e.is_interface()) {
            assert_ne!(m.subdomain(e.minus), m.subdomain(e.plus.unwrap()));
        }
        assert!(Mesh::<f64>::uniform(d, 4, 4)
            .unwrap()
            .with_interface(&[([0.1, -1.0], [0.1, 1.0])], [-0.5, 0.0])
            .is_err());
    }
}
