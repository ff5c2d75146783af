use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::frame::{Corner, EdgeFrame, Side};
use crate::vec3::{self, Vec3};
use crate::{Error, Result};

/// Two patch sides glued along a common curve. `sides[0]` is never reversed, so the
/// interface parameter `t` follows the natural direction of the first side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interface {
    pub id: usize,
    pub sides: [EdgeFrame; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCurve {
    pub id: usize,
    pub frame: EdgeFrame,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VertexKind {
    Inner,
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CurveRef {
    Interface(usize),
    Boundary(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub id: usize,
    pub kind: VertexKind,
    /// Incident patch corners in counterclockwise order.
    pub corners: Vec<Corner>,
    /// Incident interfaces as `(index, end)` with the vertex at `t = end`.
    pub interfaces: Vec<(usize, usize)>,
    pub boundaries: Vec<(usize, usize)>,
}

impl Vertex {
    pub fn valency(&self) -> usize {
        self.corners.len()
    }

    /// 0 for inner vertices, 1 for boundary vertices.
    pub fn tau(&self) -> usize {
        match self.kind {
            VertexKind::Inner => 0,
            VertexKind::Boundary => 1,
        }
    }

    pub fn patches_ccw(&self) -> Vec<usize> {
        self.corners.iter().map(|c| c.patch).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub num_patches: usize,
    pub interfaces: Vec<Interface>,
    pub boundaries: Vec<BoundaryCurve>,
    pub vertices: Vec<Vertex>,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }
    fn find(&mut self, mut i: usize) -> usize {
        while self.0[i] != i {
            self.0[i] = self.0[self.0[i]];
            i = self.0[i];
        }
        i
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.0[hi] = lo;
        }
    }
}

impl Topology {
    /// Validates side coverage and derives vertices. Sides not used by any interface
    /// become boundary curves unless `boundaries` lists them explicitly.
    pub fn new(
        num_patches: usize,
        interfaces: Vec<Interface>,
        boundaries: Option<Vec<BoundaryCurve>>,
    ) -> Result<Self> {
        let mut used: BTreeMap<(usize, Side), String> = BTreeMap::new();
        let mut claim = |f: &EdgeFrame, who: String| -> Result<()> {
            if f.patch >= num_patches {
                return Err(Error::Topology(format!(
                    "{who} references patch {} but only {num_patches} exist",
                    f.patch
                )));
            }
            if let Some(prev) = used.insert((f.patch, f.side), who.clone()) {
                return Err(Error::Topology(format!(
                    "side {} of patch {} used by both {prev} and {who}",
                    f.side.name(),
                    f.patch
                )));
            }
            Ok(())
        };
        for (i, iface) in interfaces.iter().enumerate() {
            if iface.sides[0].reversed {
                return Err(Error::Topology(format!(
                    "interface {} must list its unreversed side first",
                    iface.id
                )));
            }
            if iface.sides[0].patch == iface.sides[1].patch {
                return Err(Error::Topology(format!(
                    "interface {} joins patch {} to itself",
                    iface.id, iface.sides[0].patch
                )));
            }
            for s in &iface.sides {
                claim(s, format!("interface {}", interfaces[i].id))?;
            }
        }
        let boundaries = match boundaries {
            Some(list) => {
                for b in &list {
                    claim(&b.frame, format!("boundary {}", b.id))?;
                }
                list
            }
            None => Vec::new(),
        };
        let mut boundaries = boundaries;
        let mut next_id = boundaries.iter().map(|b| b.id + 1).max().unwrap_or(0);
        for patch in 0..num_patches {
            for side in Side::ALL {
                if !used.contains_key(&(patch, side)) {
                    boundaries.push(BoundaryCurve {
                        id: next_id,
                        frame: EdgeFrame::new(patch, side, false),
                    });
                    next_id += 1;
                }
            }
        }
        let mut topo = Topology {
            num_patches,
            interfaces,
            boundaries,
            vertices: Vec::new(),
        };
        topo.vertices = topo.derive_vertices()?;
        Ok(topo)
    }

    fn derive_vertices(&self) -> Result<Vec<Vertex>> {
        let mut uf = UnionFind::new(self.num_patches * 4);
        for iface in &self.interfaces {
            for end in 0..2 {
                uf.union(
                    iface.sides[0].corner(end).key(),
                    iface.sides[1].corner(end).key(),
                );
            }
        }
        let mut classes: BTreeMap<usize, Vec<Corner>> = BTreeMap::new();
        for patch in 0..self.num_patches {
            for c2 in 0..2u8 {
                for c1 in 0..2u8 {
                    let c = Corner { patch, c: [c1, c2] };
                    classes.entry(uf.find(c.key())).or_default().push(c);
                }
            }
        }
        let mut out = Vec::with_capacity(classes.len());
        for (id, (_, corners)) in classes.into_iter().enumerate() {
            let keys: Vec<usize> = corners.iter().map(Corner::key).collect();
            let mut ifaces = Vec::new();
            for (i, iface) in self.interfaces.iter().enumerate() {
                for end in 0..2 {
                    if keys.contains(&iface.sides[0].corner(end).key()) {
                        ifaces.push((i, end));
                    }
                }
            }
            let mut bnds = Vec::new();
            for (i, b) in self.boundaries.iter().enumerate() {
                for end in 0..2 {
                    if keys.contains(&b.frame.corner(end).key()) {
                        bnds.push((i, end));
                    }
                }
            }
            let nu = corners.len();
            let kind = if bnds.is_empty() {
                VertexKind::Inner
            } else {
                VertexKind::Boundary
            };
            let ok = match kind {
                VertexKind::Inner => ifaces.len() == nu && nu >= 3,
                VertexKind::Boundary => ifaces.len() + 1 == nu && bnds.len() == 2,
            };
            if !ok {
                return Err(Error::Topology(format!(
                    "non-manifold vertex {id}: valency {nu}, {} interfaces, {} boundary curves",
                    ifaces.len(),
                    bnds.len()
                )));
            }
            let corners = self.walk(&corners, &ifaces, &bnds)?;
            out.push(Vertex {
                id,
                kind,
                corners,
                interfaces: ifaces,
                boundaries: bnds,
            });
        }
        Ok(out)
    }

    /// Orders the corners of a vertex by walking across its interfaces.
    fn walk(
        &self,
        corners: &[Corner],
        ifaces: &[(usize, usize)],
        bnds: &[(usize, usize)],
    ) -> Result<Vec<Corner>> {
        // each corner links to its neighbour across each of its two sides
        let neighbour = |c: &Corner, side: Side| -> Option<Corner> {
            ifaces.iter().find_map(|&(i, end)| {
                let f = &self.interfaces[i].sides;
                if f[0].patch == c.patch && f[0].side == side && f[0].corner(end) == *c {
                    Some(f[1].corner(end))
                } else if f[1].patch == c.patch && f[1].side == side && f[1].corner(end) == *c {
                    Some(f[0].corner(end))
                } else {
                    None
                }
            })
        };
        let start = match bnds.first() {
            Some(&(b, end)) => self.boundaries[b].frame.corner(end),
            None => corners[0],
        };
        let mut order = vec![start];
        let mut prev_side = match bnds.first() {
            Some(&(b, _)) => self.boundaries[b].frame.side,
            None => start.sides()[0],
        };
        let mut cur = start;
        loop {
            let next_side = if cur.sides()[0] == prev_side {
                cur.sides()[1]
            } else {
                cur.sides()[0]
            };
            let Some(next) = neighbour(&cur, next_side) else {
                break;
            };
            if next == start {
                break;
            }
            if order.contains(&next) || order.len() > corners.len() {
                return Err(Error::Topology("inconsistent vertex cycle".into()));
            }
            // the side of `next` shared with `cur`
            prev_side = ifaces
                .iter()
                .find_map(|&(i, end)| {
                    let f = &self.interfaces[i].sides;
                    if f[0].corner(end) == cur && f[0].side == next_side {
                        Some(f[1].side)
                    } else if f[1].corner(end) == cur && f[1].side == next_side {
                        Some(f[0].side)
                    } else {
                        None
                    }
                })
                .ok_or_else(|| Error::Topology("broken vertex cycle".into()))?;
            order.push(next);
            cur = next;
        }
        if order.len() != corners.len() {
            return Err(Error::Topology(format!(
                "vertex cycle visits {} of {} corners",
                order.len(),
                corners.len()
            )));
        }
        Ok(order)
    }

    /// Reorients vertex cycles counterclockwise with respect to `normal` (or the first
    /// patch's parametric normal when `None`), given the corner tangents `d1`, `d2`.
    pub fn orient_ccw(
        &mut self,
        tangents: impl Fn(&Corner) -> (Vec3, Vec3),
        normal: Option<Vec3>,
    ) {
        for v in &mut self.vertices {
            if v.corners.len() < 2 {
                continue;
            }
            let first = v.corners[0];
            let second = v.corners[1];
            let (d1, d2) = tangents(&first);
            // tangent leaving the vertex along each side of the first corner
            let along = |side: Side| -> Vec3 {
                if side.axis() == 0 {
                    vec3::scale(if first.c[1] == 1 { -1.0 } else { 1.0 }, d2)
                } else {
                    vec3::scale(if first.c[0] == 1 { -1.0 } else { 1.0 }, d1)
                }
            };
            let shared = self
                .interfaces
                .iter()
                .find_map(|iface| {
                    let s = &iface.sides;
                    (0..2).find_map(|end| {
                        if s[0].corner(end) == first && s[1].corner(end) == second {
                            Some(s[0].side)
                        } else if s[1].corner(end) == first && s[0].corner(end) == second {
                            Some(s[1].side)
                        } else {
                            None
                        }
                    })
                })
                .unwrap_or(first.sides()[0]);
            let other = if first.sides()[0] == shared {
                first.sides()[1]
            } else {
                first.sides()[0]
            };
            let n = normal.unwrap_or_else(|| vec3::cross(d1, d2));
            let turn = vec3::dot(vec3::cross(along(other), along(shared)), n);
            if turn < 0.0 {
                if v.kind == VertexKind::Inner {
                    v.corners[1..].reverse();
                } else {
                    v.corners.reverse();
                }
            }
        }
    }

    /// Valency and the (interface, boundary-curve) incidence sets of every vertex.
    pub fn valency_and_sets(&self) -> Vec<(usize, Vec<CurveRef>)> {
        self.vertices
            .iter()
            .map(|v| {
                let mut s: Vec<CurveRef> = v
                    .interfaces
                    .iter()
                    .map(|&(i, _)| CurveRef::Interface(i))
                    .collect();
                s.extend(v.boundaries.iter().map(|&(b, _)| CurveRef::Boundary(b)));
                (v.valency(), s)
            })
            .collect()
    }

    /// Whether the surface has no boundary curves.
    pub fn is_closed(&self) -> bool {
        self.boundaries.is_empty()
    }

    pub fn interface_by_id(&self, id: usize) -> Option<&Interface> {
        self.interfaces.iter().find(|i| i.id == id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iface(id: usize, a: (usize, Side), b: (usize, Side), reversed: bool) -> Interface {
        Interface {
            id,
            sides: [
                EdgeFrame::new(a.0, a.1, false),
                EdgeFrame::new(b.0, b.1, reversed),
            ],
        }
    }

    /// 2x2 grid: patches 0 1 / 2 3 with patch 0 at the origin.
    fn grid() -> Topology {
        let ifs = vec![
            iface(0, (0, Side::U1), (1, Side::U0), false),
            iface(1, (2, Side::U1), (3, Side::U0), false),
            iface(2, (0, Side::V1), (2, Side::V0), false),
            iface(3, (1, Side::V1), (3, Side::V0), false),
        ];
        Topology::new(4, ifs, None).unwrap()
    }

    #[test]
    fn grid_vertices() {
        let t = grid();
        assert_eq!(t.vertices.len(), 9);
        assert_eq!(t.boundaries.len(), 8);
        let inner: Vec<_> = t
            .vertices
            .iter()
            .filter(|v| v.kind == VertexKind::Inner)
            .collect();
        assert_eq!(inner.len(), 1);
        assert_eq!(inner[0].valency(), 4);
        assert_eq!(inner[0].tau(), 0);
        let vs = t.valency_and_sets();
        let mut val: Vec<usize> = vs.iter().map(|v| v.0).collect();
        val.sort();
        assert_eq!(val, vec![1, 1, 1, 1, 2, 2, 2, 2, 4]);
    }

    #[test]
    fn duplicate_side_is_rejected() {
        let ifs = vec![
            iface(0, (0, Side::U1), (1, Side::U0), false),
            iface(1, (0, Side::U1), (1, Side::V0), false),
        ];
        assert!(matches!(
            Topology::new(2, ifs, None),
            Err(Error::Topology(_))
        ));
    }
}
