use super::frame::{EdgeFrame, Side};
use super::topology::{Interface, Topology};
use crate::spline::SpaceParams;
use crate::vec3::{self, Vec3};
use crate::{Error, Result};

/// Point and partial derivatives up to order two: `d[a][b]` is `d1^a d2^b`, `a + b <= 2`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Jet {
    pub d: [[Vec3; 3]; 3],
}

impl Jet {
    pub fn point(&self) -> Vec3 {
        self.d[0][0]
    }
}

/// A G1 multi-patch surface that can be sampled with derivatives.
pub trait SurfaceSource: Send + Sync {
    fn name(&self) -> String;

    fn topology(&self) -> &Topology;

    fn jet(&self, patch: usize, xi: [f64; 2]) -> Result<Jet>;

    fn num_patches(&self) -> usize {
        self.topology().num_patches
    }

    /// Degree, regularity and knot count when the source is itself a spline.
    fn spline_params(&self) -> Option<SpaceParams> {
        None
    }
}

/// Derivative jet of a point map by fourth-order central differences with step `h`.
///
/// The map must be defined on an `2h`-neighbourhood of the unit square.
pub fn fd_jet(f: impl Fn([f64; 2]) -> Vec3, xi: [f64; 2], h: f64) -> Jet {
    let d1 = |g: &dyn Fn(f64) -> Vec3| -> Vec3 {
        let mut s = vec3::scale(8.0, vec3::sub(g(h), g(-h)));
        s = vec3::sub(s, vec3::sub(g(2.0 * h), g(-2.0 * h)));
        vec3::scale(1.0 / (12.0 * h), s)
    };
    let d2 = |g: &dyn Fn(f64) -> Vec3| -> Vec3 {
        let mut s = vec3::scale(-30.0, g(0.0));
        s = vec3::add(s, vec3::scale(16.0, vec3::add(g(h), g(-h))));
        s = vec3::sub(s, vec3::add(g(2.0 * h), g(-2.0 * h)));
        vec3::scale(1.0 / (12.0 * h * h), s)
    };
    let along1 = |s: f64| f([xi[0] + s, xi[1]]);
    let along2 = |s: f64| f([xi[0], xi[1] + s]);
    let mut jet = Jet::default();
    jet.d[0][0] = f(xi);
    jet.d[1][0] = d1(&along1);
    jet.d[0][1] = d1(&along2);
    jet.d[2][0] = d2(&along1);
    jet.d[0][2] = d2(&along2);
    let mixed = |s: f64| {
        let g = |t: f64| f([xi[0] + s, xi[1] + t]);
        d1(&g)
    };
    jet.d[1][1] = d1(&mixed);
    jet
}

/// Matches patch sides whose edges coincide within `tol` and builds the topology.
pub fn infer_interfaces(
    num_patches: usize,
    eval: impl Fn(usize, [f64; 2]) -> Vec3,
    tol: f64,
) -> Result<Topology> {
    const TS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
    let edge = |f: &EdgeFrame| -> Vec<Vec3> {
        TS.iter().map(|&t| eval(f.patch, f.param(0.0, t))).collect()
    };
    let mut sides = Vec::new();
    for patch in 0..num_patches {
        for side in Side::ALL {
            sides.push(EdgeFrame::new(patch, side, false));
        }
    }
    let samples: Vec<Vec<Vec3>> = sides.iter().map(edge).collect();
    let mut taken = vec![false; sides.len()];
    let mut interfaces = Vec::new();
    for i in 0..sides.len() {
        if taken[i] {
            continue;
        }
        for j in i + 1..sides.len() {
            if taken[j] || sides[j].patch == sides[i].patch {
                continue;
            }
            let fwd = samples[i]
                .iter()
                .zip(&samples[j])
                .all(|(a, b)| vec3::dist(*a, *b) <= tol);
            let rev = samples[i]
                .iter()
                .zip(samples[j].iter().rev())
                .all(|(a, b)| vec3::dist(*a, *b) <= tol);
            if fwd || rev {
                taken[i] = true;
                taken[j] = true;
                let mut b = sides[j];
                b.reversed = !fwd;
                interfaces.push(Interface {
                    id: interfaces.len(),
                    sides: [sides[i], b],
                });
                break;
            }
        }
    }
    Topology::new(num_patches, interfaces, None)
}

/// Six cube faces projected radially onto the sphere of radius `radius`.
#[derive(Debug, Clone)]
pub struct CubeSphere {
    pub radius: f64,
    faces: [(Vec3, Vec3, Vec3); 6],
    topology: Topology,
}

impl CubeSphere {
    pub fn new(radius: f64) -> Result<Self> {
        let x = [1.0, 0.0, 0.0];
        let y = [0.0, 1.0, 0.0];
        let z = [0.0, 0.0, 1.0];
        let neg = |v: Vec3| vec3::scale(-1.0, v);
        // (centre, e1, e2) with e1 x e2 = centre so every face is outward oriented
        let faces = [
            (x, y, z),
            (neg(x), z, y),
            (y, z, x),
            (neg(y), x, z),
            (z, x, y),
            (neg(z), y, x),
        ];
        let cube = |patch: usize, xi: [f64; 2]| -> Vec3 {
            let (c, e1, e2) = faces[patch];
            vec3::add(
                c,
                vec3::add(
                    vec3::scale(2.0 * xi[0] - 1.0, e1),
                    vec3::scale(2.0 * xi[1] - 1.0, e2),
                ),
            )
        };
        let mut topology = infer_interfaces(6, cube, 1e-12)?;
        let eval = |patch: usize, xi: [f64; 2]| Self::face_jet(&faces, radius, patch, xi);
        topology.orient_ccw(
            |c| {
                let j = eval(c.patch, c.param());
                (j.d[1][0], j.d[0][1])
            },
            None,
        );
        Ok(CubeSphere {
            radius,
            faces,
            topology,
        })
    }

    fn face_jet(faces: &[(Vec3, Vec3, Vec3); 6], radius: f64, patch: usize, xi: [f64; 2]) -> Jet {
        let (c, e1, e2) = faces[patch];
        let q = vec3::add(
            c,
            vec3::add(
                vec3::scale(2.0 * xi[0] - 1.0, e1),
                vec3::scale(2.0 * xi[1] - 1.0, e2),
            ),
        );
        let qa = [vec3::scale(2.0, e1), vec3::scale(2.0, e2)];
        let r2 = vec3::dot(q, q);
        let r = r2.sqrt();
        let r3 = r2 * r;
        let r5 = r3 * r2;
        let qq = [vec3::dot(q, qa[0]), vec3::dot(q, qa[1])];
        let first = |a: usize| -> Vec3 {
            vec3::sub(vec3::scale(1.0 / r, qa[a]), vec3::scale(qq[a] / r3, q))
        };
        let second = |a: usize, b: usize| -> Vec3 {
            let mut s = vec3::scale(-qq[b] / r3, qa[a]);
            s = vec3::sub(s, vec3::scale(qq[a] / r3, qa[b]));
            s = vec3::sub(s, vec3::scale(vec3::dot(qa[a], qa[b]) / r3, q));
            vec3::add(s, vec3::scale(3.0 * qq[a] * qq[b] / r5, q))
        };
        let mut jet = Jet::default();
        jet.d[0][0] = vec3::scale(radius / r, q);
        jet.d[1][0] = vec3::scale(radius, first(0));
        jet.d[0][1] = vec3::scale(radius, first(1));
        jet.d[2][0] = vec3::scale(radius, second(0, 0));
        jet.d[1][1] = vec3::scale(radius, second(0, 1));
        jet.d[0][2] = vec3::scale(radius, second(1, 1));
        jet
    }
}

impl SurfaceSource for CubeSphere {
    fn name(&self) -> String {
        "cube-sphere".into()
    }

    fn topology(&self) -> &Topology {
        &self.topology
    }

    fn jet(&self, patch: usize, xi: [f64; 2]) -> Result<Jet> {
        if patch >= 6 {
            return Err(Error::InvalidArgument(format!("no patch {patch}")));
        }
        Ok(Self::face_jet(&self.faces, self.radius, patch, xi))
    }
}

/// Names accepted by [`analytic_source`].
pub fn analytic_names() -> &'static [&'static str] {
    &["cube-sphere"]
}

/// Registered analytic surfaces by name.
pub fn analytic_source(name: &str) -> Result<Box<dyn SurfaceSource>> {
    match name {
        "cube-sphere" => Ok(Box::new(CubeSphere::new(1.0)?)),
        _ => Err(Error::UnknownName {
            kind: "analytic surface",
            name: name.into(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mpatch::VertexKind;

    #[test]
    fn cube_sphere_topology() {
        let s = CubeSphere::new(1.0).unwrap();
        let t = s.topology();
        assert_eq!(t.interfaces.len(), 12);
        assert!(t.is_closed());
        assert_eq!(t.vertices.len(), 8);
        assert!(t
            .vertices
            .iter()
            .all(|v| v.kind == VertexKind::Inner && v.valency() == 3));
    }

    #[test]
    fn cube_sphere_derivatives_match_differences() {
        let s = CubeSphere::new(1.3).unwrap();
        for patch in 0..6 {
            let xi = [0.31, 0.77];
            let exact = s.jet(patch, xi).unwrap();
            let approx = fd_jet(|x| s.jet(patch, x).unwrap().point(), xi, 1e-3);
            for a in 0..3 {
                for b in 0..3 - a {
                    assert!(vec3::dist(exact.d[a][b], approx.d[a][b]) < 1e-8, "{a} {b}");
                }
            }
            assert!((vec3::norm(exact.point()) - 1.3).abs() < 1e-14);
        }
    }
}
