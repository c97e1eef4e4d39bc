//! Vertex-centred grids for the three geometries.
//!
//! Every grid is reduced to the same data: lumped node masses and
//! finite-volume stiffness matrices split by region, a potential matrix
//! on Ω₁, the interface nodes with their boundary quadrature weights, and
//! one-sided normal-derivative stencils on either side of Γ₁. The
//! discrete operators then never look at the geometry again.

use std::collections::VecDeque;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{arc_length, chart_atlas, Domain1D, Domain2D, OuterBoundary};
use crate::linalg::{SymSparse, TripletBuilder};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// Open inclusion Ω₁.
    Inner,
    /// Γ₁.
    Interface,
    /// Ω₂, including the outer boundary Γ.
    Outer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Interior,
    Exterior,
}

/// Quadrature for the λ·1_{Ω₁} term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PotentialRule {
    /// Cell-midpoint values, i.e. averages of the cell's nodes. Removes the
    /// O(λh²) defect of the interior Neumann-to-Dirichlet map in 1D.
    #[default]
    Midpoint,
    /// Diagonal: λ times the Ω₁ part of the lumped mass.
    Lumped,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridKind {
    OneD {
        domain: Domain1D,
        h: f64,
    },
    Polar {
        domain: Domain2D,
        dr: f64,
        /// Radial index of Γ₁.
        interface_ring: usize,
        rings: usize,
        ntheta: usize,
    },
    Cartesian {
        domain: Domain2D,
        h: f64,
        nx: usize,
        ny: usize,
    },
}

pub type Stencil = Vec<(usize, f64)>;

#[derive(Debug, Clone)]
pub struct Grid {
    pub kind: GridKind,
    pub coords: Vec<[f64; 2]>,
    pub region: Vec<Region>,
    pub on_outer_boundary: Vec<bool>,
    /// Lumped masses of the Ω₁ and Ω₂ parts of each dual cell.
    pub mass1: Vec<f64>,
    pub mass2: Vec<f64>,
    /// Stiffness from Ω₁ cells and from Ω₂ cells; K = K1 + K2.
    pub k1: SymSparse,
    pub k2: SymSparse,
    pub potential: SymSparse,
    pub potential_rule: PotentialRule,
    potential_midpoint: SymSparse,
    /// Γ₁ nodes: [a₁, a₂] in 1D, increasing angle in polar mode.
    pub interface: Vec<usize>,
    pub interface_weights: Vec<f64>,
    /// Derivative along the normal pointing into Ω₁, one stencil per
    /// interface node, using only nodes of the named side (and Γ₁).
    pub gamma1_interior: Vec<Stencil>,
    pub gamma1_exterior: Vec<Stencil>,
    /// Ω₁ ∪ Γ₁ nodes, the unknowns of the interior Neumann problem.
    pub inner_nodes: Vec<usize>,
    /// Ω₂ nodes (Γ₁ excluded), the unknowns of B.
    pub outer_nodes: Vec<usize>,
    pub outer_boundary: Vec<usize>,
    /// Position of each node within `outer_nodes` / `inner_nodes`.
    pub outer_index: Vec<Option<usize>>,
    pub inner_index: Vec<Option<usize>>,
}

struct Parts {
    kind: GridKind,
    coords: Vec<[f64; 2]>,
    region: Vec<Region>,
    on_outer_boundary: Vec<bool>,
    mass1: Vec<f64>,
    mass2: Vec<f64>,
    k1: TripletBuilder,
    k2: TripletBuilder,
    midpoint: TripletBuilder,
    interface: Vec<usize>,
    interface_weights: Vec<f64>,
    gamma1_interior: Vec<Stencil>,
    gamma1_exterior: Vec<Stencil>,
}

impl Grid {
    fn finish(p: Parts) -> Result<Self> {
        let n = p.coords.len();
        let inner_nodes: Vec<usize> = (0..n).filter(|&i| p.region[i] != Region::Outer).collect();
        let outer_nodes: Vec<usize> = (0..n).filter(|&i| p.region[i] == Region::Outer).collect();
        if outer_nodes.is_empty() {
            return Err(Error::Domain("empty exterior".into()));
        }
        if p.interface.is_empty() {
            return Err(Error::Grid("no interface nodes".into()));
        }
        let mut outer_index = vec![None; n];
        for (k, &i) in outer_nodes.iter().enumerate() {
            outer_index[i] = Some(k);
        }
        let mut inner_index = vec![None; n];
        for (k, &i) in inner_nodes.iter().enumerate() {
            inner_index[i] = Some(k);
        }
        let outer_boundary = (0..n).filter(|&i| p.on_outer_boundary[i]).collect();
        let mass1 = p.mass1;
        let midpoint = p.midpoint.build();
        let grid = Self {
            kind: p.kind,
            coords: p.coords,
            region: p.region,
            on_outer_boundary: p.on_outer_boundary,
            k1: p.k1.build(),
            k2: p.k2.build(),
            potential: midpoint.clone(),
            potential_rule: PotentialRule::Midpoint,
            potential_midpoint: midpoint,
            mass1,
            mass2: p.mass2,
            interface: p.interface,
            interface_weights: p.interface_weights,
            gamma1_interior: p.gamma1_interior,
            gamma1_exterior: p.gamma1_exterior,
            inner_nodes,
            outer_nodes,
            outer_boundary,
            outer_index,
            inner_index,
        };
        grid.check_exterior_connected()?;
        Ok(grid)
    }

    pub fn with_potential_rule(mut self, rule: PotentialRule) -> Self {
        self.potential_rule = rule;
        self.potential = match rule {
            PotentialRule::Midpoint => self.potential_midpoint.clone(),
            PotentialRule::Lumped => SymSparse::from_diagonal(&self.mass1),
        };
        self
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn mass(&self) -> Vec<f64> {
        self.mass1.iter().zip(&self.mass2).map(|(a, b)| a + b).collect()
    }

    /// Weights of the discrete L²(Ω₂) inner product on `outer_nodes`.
    pub fn outer_mass(&self) -> Vec<f64> {
        self.outer_nodes.iter().map(|&i| self.mass2[i]).collect()
    }

    pub fn inner_mass(&self) -> Vec<f64> {
        self.inner_nodes.iter().map(|&i| self.mass1[i]).collect()
    }

    pub fn stiffness(&self) -> SymSparse {
        self.k1.add_scaled(&self.k2, 1.0).expect("stiffness parts share a dimension")
    }

    pub fn is_one_d(&self) -> bool {
        matches!(self.kind, GridKind::OneD { .. })
    }

    pub fn is_polar(&self) -> bool {
        matches!(self.kind, GridKind::Polar { .. })
    }

    /// Characteristic mesh width.
    pub fn spacing(&self) -> f64 {
        match self.kind {
            GridKind::OneD { h, .. } | GridKind::Cartesian { h, .. } => h,
            GridKind::Polar { dr, .. } => dr,
        }
    }

    fn check_exterior_connected(&self) -> Result<()> {
        let n = self.len();
        let k2 = &self.k2;
        let mut seen = vec![false; n];
        let mut queue: VecDeque<usize> = self
            .outer_boundary
            .iter()
            .copied()
            .filter(|&i| self.region[i] == Region::Outer)
            .collect();
        for &i in &queue {
            seen[i] = true;
        }
        while let Some(i) = queue.pop_front() {
            for (j, v) in k2.row(i) {
                if j != i && v != 0.0 && !seen[j] && self.region[j] == Region::Outer {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        if let Some(&bad) = self.outer_nodes.iter().find(|&&i| !seen[i]) {
            return Err(Error::Grid(format!(
                "exterior node {bad} at {:?} is not connected to the outer boundary",
                self.coords[bad]
            )));
        }
        Ok(())
    }

    pub fn one_d(domain: Domain1D, h: f64) -> Result<Self> {
        let nf = domain.outer_length / h;
        let n_cells = nf.round() as usize;
        let aligned = |x: f64| -> Result<usize> {
            let i = x / h;
            if (i - i.round()).abs() > 1e-9 * i.max(1.0) {
                return Err(Error::Grid(format!("{x} is not a grid node for h = {h}")));
            }
            Ok(i.round() as usize)
        };
        if !(h > 0.0) || (nf - nf.round()).abs() > 1e-9 * nf {
            return Err(Error::Grid(format!("h = {h} does not divide L = {}", domain.outer_length)));
        }
        let (i1, i2) = (aligned(domain.inclusion_left)?, aligned(domain.inclusion_right)?);
        if i1 < 2 || i2 < i1 + 2 || n_cells < i2 + 2 {
            return Err(Error::Grid(
                "need two or more cells in each of (0, a1), (a1, a2), (a2, L)".into(),
            ));
        }
        let n = n_cells + 1;
        let region: Vec<Region> = (0..n)
            .map(|i| {
                if i == i1 || i == i2 {
                    Region::Interface
                } else if i > i1 && i < i2 {
                    Region::Inner
                } else {
                    Region::Outer
                }
            })
            .collect();
        let mut mass1 = vec![0.0; n];
        let mut mass2 = vec![0.0; n];
        let mut k1 = TripletBuilder::new(n);
        let mut k2 = TripletBuilder::new(n);
        let mut mid = TripletBuilder::new(n);
        for c in 0..n_cells {
            let inside = c >= i1 && c < i2;
            let (m, k) = if inside { (&mut mass1, &mut k1) } else { (&mut mass2, &mut k2) };
            m[c] += 0.5 * h;
            m[c + 1] += 0.5 * h;
            k.add_edge(c, c + 1, 1.0 / h);
            if inside {
                mid.add_sym(c, c, 0.25 * h);
                mid.add_sym(c + 1, c + 1, 0.25 * h);
                mid.add_sym(c, c + 1, 0.25 * h);
            }
        }
        let d = 1.0 / (2.0 * h);
        // into Ω₁ is +x at a₁ and −x at a₂
        let gamma1_exterior = vec![
            vec![(i1, 3.0 * d), (i1 - 1, -4.0 * d), (i1 - 2, d)],
            vec![(i2, 3.0 * d), (i2 + 1, -4.0 * d), (i2 + 2, d)],
        ];
        let gamma1_interior = vec![
            vec![(i1, -3.0 * d), (i1 + 1, 4.0 * d), (i1 + 2, -d)],
            vec![(i2, -3.0 * d), (i2 - 1, 4.0 * d), (i2 - 2, -d)],
        ];
        let mut on_outer_boundary = vec![false; n];
        on_outer_boundary[0] = true;
        on_outer_boundary[n - 1] = true;
        Self::finish(Parts {
            kind: GridKind::OneD { domain, h },
            coords: (0..n).map(|i| [i as f64 * h, 0.0]).collect(),
            region,
            on_outer_boundary,
            mass1,
            mass2,
            k1,
            k2,
            midpoint: mid,
            interface: vec![i1, i2],
            interface_weights: vec![1.0, 1.0],
            gamma1_interior,
            gamma1_exterior,
        })
    }

    /// Disk inside a concentric disk. `exterior_rings` radial intervals
    /// span (R, R_out); the same spacing continues inward to the centre,
    /// so R must be a multiple of it.
    pub fn polar(domain: Domain2D, exterior_rings: usize, ntheta: usize) -> Result<Self> {
        let OuterBoundary::Disk { radius: r_out } = domain.outer else {
            return Err(Error::Grid("polar mode needs a disk outer boundary".into()));
        };
        if !domain.inclusion.is_disk() {
            return Err(Error::Grid("polar mode needs a disk inclusion".into()));
        }
        if exterior_rings < 2 || ntheta < 8 {
            return Err(Error::Grid("polar grid needs >= 2 exterior rings and >= 8 angles".into()));
        }
        let r_in = domain.inclusion.radius;
        let dr = (r_out - r_in) / exterior_rings as f64;
        let q = r_in / dr;
        if (q - q.round()).abs() > 1e-9 * q {
            return Err(Error::Grid(format!(
                "inclusion radius {r_in} is not a multiple of dr = {dr}"
            )));
        }
        let ir = q.round() as usize;
        if ir < 3 {
            return Err(Error::Grid("need three or more rings inside the inclusion".into()));
        }
        let rings = ir + exterior_rings;
        let n = 1 + rings * ntheta;
        let dth = 2.0 * PI / ntheta as f64;
        let idx = |i: usize, j: usize| -> usize {
            if i == 0 {
                0
            } else {
                1 + (i - 1) * ntheta + (j % ntheta)
            }
        };
        let c = domain.inclusion.center;
        let r = |i: usize| i as f64 * dr;
        let mut coords = vec![c; n];
        let mut region = vec![Region::Inner; n];
        let mut on_outer_boundary = vec![false; n];
        for i in 1..=rings {
            for j in 0..ntheta {
                let th = j as f64 * dth;
                let k = idx(i, j);
                coords[k] = [c[0] + r(i) * th.cos(), c[1] + r(i) * th.sin()];
                region[k] = match i.cmp(&ir) {
                    std::cmp::Ordering::Less => Region::Inner,
                    std::cmp::Ordering::Equal => Region::Interface,
                    std::cmp::Ordering::Greater => Region::Outer,
                };
                on_outer_boundary[k] = i == rings;
            }
        }

        let mut mass1 = vec![0.0; n];
        let mut mass2 = vec![0.0; n];
        let mut k1 = TripletBuilder::new(n);
        let mut k2 = TripletBuilder::new(n);
        let mut mid = TripletBuilder::new(n);
        let sector = |a: f64, b: f64| 0.5 * dth * (b * b - a * a);

        mass1[0] = PI * (0.5 * dr).powi(2);
        for i in 1..=rings {
            let lo = r(i) - 0.5 * dr;
            let hi = if i == rings { r(i) } else { r(i) + 0.5 * dr };
            for j in 0..ntheta {
                let k = idx(i, j);
                if i < ir {
                    mass1[k] = sector(lo, hi);
                } else if i == ir {
                    mass1[k] = sector(lo, r_in);
                    mass2[k] = sector(r_in, hi);
                } else {
                    mass2[k] = sector(lo, hi);
                }
            }
        }
        // radial edges (i, j)–(i+1, j); the centre spoke has coefficient Δθ/2
        for i in 0..rings {
            let coef = (r(i) + 0.5 * dr) * dth / dr;
            let builder = if i < ir { &mut k1 } else { &mut k2 };
            for j in 0..ntheta {
                builder.add_edge(idx(i, j), idx(i + 1, j), coef);
            }
        }
        // angular edges, split across Γ₁
        for i in 1..=rings {
            let lo = r(i) - 0.5 * dr;
            let hi = if i == rings { r(i) } else { r(i) + 0.5 * dr };
            for j in 0..ntheta {
                let (a, b) = (idx(i, j), idx(i, j + 1));
                if i < ir {
                    k1.add_edge(a, b, (hi / lo).ln() / dth);
                } else if i == ir {
                    k1.add_edge(a, b, (r_in / lo).ln() / dth);
                    k2.add_edge(a, b, (hi / r_in).ln() / dth);
                } else {
                    k2.add_edge(a, b, (hi / lo).ln() / dth);
                }
            }
        }
        // potential: radial midpoint times angular nodal value
        for i in 0..ir {
            let area = sector(r(i), r(i + 1));
            for j in 0..ntheta {
                let (a, b) = (idx(i, j), idx(i + 1, j));
                mid.add_sym(a, a, 0.25 * area);
                mid.add_sym(b, b, 0.25 * area);
                mid.add_sym(a, b, 0.25 * area);
            }
        }

        let d = 1.0 / (2.0 * dr);
        let mut interface = Vec::with_capacity(ntheta);
        let mut g_in = Vec::with_capacity(ntheta);
        let mut g_out = Vec::with_capacity(ntheta);
        for j in 0..ntheta {
            interface.push(idx(ir, j));
            // into Ω₁ is −r
            g_out.push(vec![(idx(ir, j), 3.0 * d), (idx(ir + 1, j), -4.0 * d), (idx(ir + 2, j), d)]);
            g_in.push(vec![(idx(ir, j), -3.0 * d), (idx(ir - 1, j), 4.0 * d), (idx(ir - 2, j), -d)]);
        }
        let atlas = chart_atlas(&domain, ntheta)?;
        let interface_weights = atlas.iter().map(|e| e.weight).collect();
        Self::finish(Parts {
            kind: GridKind::Polar {
                domain,
                dr,
                interface_ring: ir,
                rings,
                ntheta,
            },
            coords,
            region,
            on_outer_boundary,
            mass1,
            mass2,
            k1,
            k2,
            midpoint: mid,
            interface,
            interface_weights,
            gamma1_interior: g_in,
            gamma1_exterior: g_out,
        })
    }

    /// Staircase approximation on a uniform Cartesian grid: a cell
    /// belongs to Ω₁ when its centre does. First-order at the interface.
    pub fn cartesian(domain: Domain2D, h: f64) -> Result<Self> {
        let OuterBoundary::Rectangle { lx, ly } = domain.outer else {
            return Err(Error::Grid("Cartesian mode needs a rectangular outer boundary".into()));
        };
        let (fx, fy) = (lx / h, ly / h);
        if !(h > 0.0) || (fx - fx.round()).abs() > 1e-9 * fx || (fy - fy.round()).abs() > 1e-9 * fy {
            return Err(Error::Grid(format!("h = {h} does not divide the rectangle")));
        }
        let (nx, ny) = (fx.round() as usize, fy.round() as usize);
        let n = (nx + 1) * (ny + 1);
        let idx = |i: usize, j: usize| j * (nx + 1) + i;
        let inc = &domain.inclusion;
        let cell_inside: Vec<bool> = (0..nx * ny)
            .map(|c| {
                let (i, j) = (c % nx, c / nx);
                inc.contains([(i as f64 + 0.5) * h, (j as f64 + 0.5) * h])
            })
            .collect();
        let mut count_in = vec![0usize; n];
        let mut count_all = vec![0usize; n];
        let mut mass1 = vec![0.0; n];
        let mut mass2 = vec![0.0; n];
        let mut k1 = TripletBuilder::new(n);
        let mut k2 = TripletBuilder::new(n);
        let mut mid = TripletBuilder::new(n);
        for c in 0..nx * ny {
            let (i, j) = (c % nx, c / nx);
            let corners = [idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)];
            let inside = cell_inside[c];
            let (m, k) = if inside { (&mut mass1, &mut k1) } else { (&mut mass2, &mut k2) };
            for &v in &corners {
                m[v] += 0.25 * h * h;
                count_all[v] += 1;
                if inside {
                    count_in[v] += 1;
                }
            }
            for e in 0..4 {
                k.add_edge(corners[e], corners[(e + 1) % 4], 0.5);
            }
            if inside {
                for &a in &corners {
                    for &b in &corners {
                        if a <= b {
                            mid.add_sym(a, b, h * h / 16.0);
                        }
                    }
                }
            }
        }
        let region: Vec<Region> = (0..n)
            .map(|v| {
                if count_in[v] == count_all[v] && count_in[v] > 0 {
                    Region::Inner
                } else if count_in[v] == 0 {
                    Region::Outer
                } else {
                    Region::Interface
                }
            })
            .collect();
        let on_outer_boundary: Vec<bool> = (0..n)
            .map(|v| {
                let (i, j) = (v % (nx + 1), v / (nx + 1));
                i == 0 || j == 0 || i == nx || j == ny
            })
            .collect();
        if (0..n).any(|v| on_outer_boundary[v] && region[v] != Region::Outer) {
            return Err(Error::Grid("inclusion touches the outer boundary".into()));
        }
        let interface: Vec<usize> = (0..n).filter(|&v| region[v] == Region::Interface).collect();
        let d = 1.0 / (2.0 * h);
        let mut g_in = Vec::with_capacity(interface.len());
        let mut g_out = Vec::with_capacity(interface.len());
        for &v in &interface {
            let (i, j) = ((v % (nx + 1)) as i64, (v / (nx + 1)) as i64);
            let p = [i as f64 * h, j as f64 * h];
            let (dx, dy) = (inc.center[0] - p[0], inc.center[1] - p[1]);
            // grid axis closest to the inward direction
            let (si, sj) = if dx.abs() >= dy.abs() {
                (dx.signum() as i64, 0)
            } else {
                (0, dy.signum() as i64)
            };
            let at = |t: i64| -> Result<usize> {
                let (a, b) = (i + t * si, j + t * sj);
                if a < 0 || b < 0 || a > nx as i64 || b > ny as i64 {
                    return Err(Error::Grid("insufficient stencil layers".into()));
                }
                Ok(idx(a as usize, b as usize))
            };
            let (p1, p2, m1, m2) = (at(1)?, at(2)?, at(-1)?, at(-2)?);
            if region[p1] == Region::Outer || region[p2] == Region::Outer {
                return Err(Error::Grid(format!("insufficient interior stencil layers at node {v}")));
            }
            if region[m1] == Region::Inner || region[m2] == Region::Inner {
                return Err(Error::Grid(format!("insufficient exterior stencil layers at node {v}")));
            }
            g_in.push(vec![(v, -3.0 * d), (p1, 4.0 * d), (p2, -d)]);
            g_out.push(vec![(v, 3.0 * d), (m1, -4.0 * d), (m2, d)]);
        }
        let w = arc_length(inc, 1e-12) / interface.len().max(1) as f64;
        let interface_weights = vec![w; interface.len()];
        let coords = (0..n)
            .map(|v| [(v % (nx + 1)) as f64 * h, (v / (nx + 1)) as f64 * h])
            .collect();
        Self::finish(Parts {
            kind: GridKind::Cartesian { domain, h, nx, ny },
            coords,
            region,
            on_outer_boundary,
            mass1,
            mass2,
            k1,
            k2,
            midpoint: mid,
            interface,
            interface_weights,
            gamma1_interior: g_in,
            gamma1_exterior: g_out,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Inclusion;

    #[test]
    fn one_d_index_sets() {
        let g = Grid::one_d(Domain1D::new(1.0, 0.25, 0.75).unwrap(), 0.125).unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g.interface, vec![2, 6]);
        assert_eq!(g.outer_nodes, vec![0, 1, 7, 8]);
        assert_eq!(g.inner_nodes, vec![2, 3, 4, 5, 6]);
        let total: f64 = g.mass().iter().sum();
        assert!((total - 1.0).abs() < 1e-15);
        let m1: f64 = g.mass1.iter().sum();
        assert!((m1 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn misaligned_interface_rejected() {
        let r = Grid::one_d(Domain1D::new(1.0, 0.3, 0.75).unwrap(), 0.125);
        assert!(matches!(r, Err(Error::Grid(_))));
    }

    #[test]
    fn polar_masses_sum_to_areas() {
        let d = Domain2D::unit_disk_in_polar();
        let g = Grid::polar(d, 8, 32).unwrap();
        let m1: f64 = g.mass1.iter().sum();
        let m2: f64 = g.mass2.iter().sum();
        assert!((m1 - PI).abs() < 1e-12);
        assert!((m2 - PI * (1.5f64.powi(2) - 1.0)).abs() < 1e-12);
        let w: f64 = g.interface_weights.iter().sum();
        assert!((w - 2.0 * PI).abs() < 1e-12);
        assert_eq!(g.stiffness().bandwidth(), 32);
    }

    #[test]
    fn polar_stiffness_kills_constants() {
        let g = Grid::polar(Domain2D::unit_disk_in_polar(), 4, 16).unwrap();
        let k = g.stiffness();
        let r = k.matvec(&vec![1.0; g.len()]);
        assert!(r.iter().all(|v| v.abs() < 1e-12));
        assert!(k.asymmetry() == 0.0);
    }

    #[test]
    fn cartesian_staircase_classification() {
        let d = Domain2D::new(OuterBoundary::Rectangle { lx: 2.0, ly: 2.0 }, Inclusion::disk([1.0, 1.0], 0.5)).unwrap();
        let g = Grid::cartesian(d, 1.0 / 32.0).unwrap();
        assert!(!g.interface.is_empty());
        let m1: f64 = g.mass1.iter().sum();
        assert!((m1 - PI * 0.25).abs() < 0.05);
        let w: f64 = g.interface_weights.iter().sum();
        assert!((w - PI).abs() < 1e-9);
    }
}
