//! Built-in test geometries.

use std::f64::consts::PI;

use crate::construct::{method_by_name, ConstructionParams};
use crate::gluing::GluingData;
use crate::mpatch::{infer_interfaces, CubeSphere, MultiPatchSpline};
use crate::spline::{SplineSpace1D, TensorSpace};
use crate::vec3::{self, Vec3};
use crate::{Error, Result};

/// A bundled geometry and, for constructed surfaces, its gluing data.
pub struct Bundled {
    pub surface: MultiPatchSpline,
    pub gluing: Option<Vec<GluingData>>,
}

pub fn names() -> &'static [&'static str] {
    &[
        "bilinear-grid",
        "tripatch-bilinear",
        "warped-tripatch",
        "warped-grid-4x4",
        "sphere-asg1",
    ]
}

pub fn by_name(name: &str) -> Result<Bundled> {
    let plain = |surface| Bundled {
        surface,
        gluing: None,
    };
    match name {
        "bilinear-grid" => Ok(plain(bilinear_grid()?)),
        "tripatch-bilinear" => Ok(plain(tripatch_bilinear()?)),
        "warped-tripatch" => Ok(plain(warped_tripatch()?)),
        "warped-grid-4x4" => Ok(plain(warped_grid(4)?)),
        "sphere-asg1" => {
            let (surface, gluing) = sphere_asg1()?;
            Ok(Bundled {
                surface,
                gluing: Some(gluing),
            })
        }
        _ => Err(Error::UnknownName {
            kind: "bundled geometry",
            name: name.into(),
        }),
    }
}

fn bilinear(corners: [Vec3; 4]) -> Vec<Vec3> {
    // corners at (0,0), (0,1), (1,0), (1,1) in coefficient order j1 * 2 + j2
    corners.to_vec()
}

fn assemble(space: SplineSpace1D, patches: Vec<Vec<Vec3>>) -> Result<MultiPatchSpline> {
    let ts = TensorSpace::new(space.clone());
    let topo = infer_interfaces(
        patches.len(),
        |p, xi| ts.eval_patch(&patches[p], xi, 0, 0).expect("inside domain"),
        1e-10,
    )?;
    MultiPatchSpline::canonicalize(space, patches, topo.interfaces, Some(topo.boundaries))
}

fn grid_point(i: usize, j: usize) -> Vec3 {
    // 3x3 lattice on [0, 2]^2 with the centre and edge midpoints displaced
    let mut p = [i as f64, j as f64, 0.0];
    if i == 1 {
        p[1] += if j == 1 { -0.1 } else { 0.0 };
        p[0] += 0.12 * (j as f64 - 1.0) + if j == 1 { 0.15 } else { 0.0 };
    }
    if j == 1 && i != 1 {
        p[1] += 0.1 * (i as f64 - 1.0);
    }
    p
}

/// Four bilinear patches on a distorted 2x2 grid.
pub fn bilinear_grid() -> Result<MultiPatchSpline> {
    let space = SplineSpace1D::new(1, 0, 0)?;
    let mut patches = Vec::new();
    for a in 0..2 {
        for b in 0..2 {
            patches.push(bilinear([
                grid_point(a, b),
                grid_point(a, b + 1),
                grid_point(a + 1, b),
                grid_point(a + 1, b + 1),
            ]));
        }
    }
    assemble(space, patches)
}

/// Corners of the three quadrilaterals around a valency-3 vertex at the origin.
fn tripatch_quads() -> Vec<[Vec3; 4]> {
    let at = |r: f64, deg: f64| [r * (deg * PI / 180.0).cos(), r * (deg * PI / 180.0).sin(), 0.0];
    let spokes = [at(1.0, 90.0), at(0.95, 215.0), at(1.05, 330.0)];
    let outer = [at(1.1, 150.0), at(1.2, 268.0), at(1.15, 35.0)];
    (0..3)
        .map(|k| {
            let a = spokes[k];
            let b = spokes[(k + 1) % 3];
            let m = outer[k];
            // (0,0) origin, (1,0) along spoke a, (0,1) along spoke b
            [[0.0, 0.0, 0.0], b, a, m]
        })
        .collect()
}

/// Three bilinear patches meeting at an inner vertex of valency 3.
pub fn tripatch_bilinear() -> Result<MultiPatchSpline> {
    let space = SplineSpace1D::new(1, 0, 0)?;
    assemble(space, tripatch_quads().into_iter().map(bilinear).collect())
}

fn warp(p: Vec3) -> Vec3 {
    [
        p[0] + 0.06 * (2.0 * p[1] + 0.3).sin() + 0.03 * (p[0] * p[1]),
        p[1] + 0.05 * (2.5 * p[0]).sin() - 0.02 * p[0] * p[0],
        0.0,
    ]
}

fn bilinear_map(c: &[Vec3; 4], xi: [f64; 2]) -> Vec3 {
    let (u, v) = (xi[0], xi[1]);
    let mut p = vec3::scale((1.0 - u) * (1.0 - v), c[0]);
    vec3::axpy(&mut p, (1.0 - u) * v, c[1]);
    vec3::axpy(&mut p, u * (1.0 - v), c[2]);
    vec3::axpy(&mut p, u * v, c[3]);
    p
}

fn warped(quads: &[[Vec3; 4]]) -> Result<MultiPatchSpline> {
    let space = SplineSpace1D::new(3, 2, 2)?;
    let ts = TensorSpace::new(space.clone());
    let patches = quads
        .iter()
        .map(|c| ts.interpolate(|xi| warp(bilinear_map(c, xi))))
        .collect::<Result<Vec<_>>>()?;
    assemble(space, patches)
}

/// A smooth planar warp of the three-patch domain, interpolated by C2 bicubic splines
/// with two inner knots. G1 but not AS-G1.
pub fn warped_tripatch() -> Result<MultiPatchSpline> {
    warped(&tripatch_quads())
}

/// An `m x m` grid on the unit square under the same warp.
pub fn warped_grid(m: usize) -> Result<MultiPatchSpline> {
    let h = 1.0 / m as f64;
    let mut quads = Vec::new();
    for a in 0..m {
        for b in 0..m {
            let p = |i: usize, j: usize| [(a + i) as f64 * h, (b + j) as f64 * h, 0.0];
            quads.push([p(0, 0), p(0, 1), p(1, 0), p(1, 1)]);
        }
    }
    warped(&quads)
}

/// AS-G1 approximation of the cube sphere in `S^{4,1}_1`, built by the local method.
pub fn sphere_asg1() -> Result<(MultiPatchSpline, Vec<GluingData>)> {
    let source = CubeSphere::new(1.0)?;
    let params = ConstructionParams::new(4, 1, 1)?;
    let c = method_by_name("local")?.construct(&source, &params)?;
    Ok((c.surface, c.gluing))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mpatch::VertexKind;

    #[test]
    fn bilinear_grid_has_one_inner_vertex_of_valency_four() {
        let g = bilinear_grid().unwrap();
        assert_eq!(g.topology.interfaces.len(), 4);
        let inner: Vec<_> = g
            .topology
            .vertices
            .iter()
            .filter(|v| v.kind == VertexKind::Inner)
            .collect();
        assert_eq!(inner.len(), 1);
        assert_eq!(inner[0].valency(), 4);
    }

    #[test]
    fn tripatch_vertex_is_counterclockwise() {
        let g = tripatch_bilinear().unwrap();
        let v = g
            .topology
            .vertices
            .iter()
            .find(|v| v.kind == VertexKind::Inner)
            .unwrap();
        assert_eq!(v.valency(), 3);
        // angles of the patch centroids increase along the cycle
        let ang: Vec<f64> = v
            .corners
            .iter()
            .map(|c| {
                let p = g.eval(c.patch, [0.5, 0.5], 0, 0).unwrap();
                p[1].atan2(p[0])
            })
            .collect();
        let mut turns = 0.0;
        for i in 0..3 {
            let mut d = ang[(i + 1) % 3] - ang[i];
            while d <= -PI {
                d += 2.0 * PI;
            }
            while d > PI {
                d -= 2.0 * PI;
            }
            turns += d;
        }
        assert!((turns - 2.0 * PI).abs() < 1e-9, "{turns}");
    }

    #[test]
    fn warped_inputs_are_conforming() {
        let g = warped_tripatch().unwrap();
        assert_eq!(g.topology.interfaces.len(), 3);
        let g = warped_grid(4).unwrap();
        assert_eq!(g.topology.interfaces.len(), 24);
    }
}
