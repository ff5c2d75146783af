use serde::{Deserialize, Serialize};

use super::source::Jet;

/// Patch side: `U0` is `xi1 = 0`, `U1` is `xi1 = 1`, `V0` is `xi2 = 0`, `V1` is `xi2 = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    U0,
    U1,
    V0,
    V1,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::U0, Side::U1, Side::V0, Side::V1];

    /// Parameter direction transversal to the side.
    pub fn axis(self) -> usize {
        match self {
            Side::U0 | Side::U1 => 0,
            Side::V0 | Side::V1 => 1,
        }
    }

    pub fn at_one(self) -> bool {
        matches!(self, Side::U1 | Side::V1)
    }

    pub fn name(self) -> &'static str {
        match self {
            Side::U0 => "u0",
            Side::U1 => "u1",
            Side::V0 => "v0",
            Side::V1 => "v1",
        }
    }
}

/// Patch corner `(c1, c2)` in the patch's own parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Corner {
    pub patch: usize,
    pub c: [u8; 2],
}

impl Corner {
    pub fn param(&self) -> [f64; 2] {
        [self.c[0] as f64, self.c[1] as f64]
    }

    /// Coefficient index `(j1, j2)` at corner-relative offset `(i, j)`.
    pub fn index(&self, i: usize, j: usize, n: usize) -> (usize, usize) {
        (
            if self.c[0] == 1 { n - 1 - i } else { i },
            if self.c[1] == 1 { n - 1 - j } else { j },
        )
    }

    /// The two sides meeting at the corner: the one transversal to `xi1`, then to `xi2`.
    pub fn sides(&self) -> [Side; 2] {
        [
            if self.c[0] == 1 { Side::U1 } else { Side::U0 },
            if self.c[1] == 1 { Side::V1 } else { Side::V0 },
        ]
    }

    pub(crate) fn key(&self) -> usize {
        self.patch * 4 + self.c[0] as usize + 2 * self.c[1] as usize
    }
}

/// Local coordinates `(d, t)` attached to a patch side: `d` is the distance from the side,
/// `t` runs along it (against the natural direction when `reversed`).
///
/// On uniform open knot vectors `N_j(1 - x) = N_{n-1-j}(x)`, so in local coordinates a
/// patch is again a tensor spline with permuted coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EdgeFrame {
    pub patch: usize,
    pub side: Side,
    pub reversed: bool,
}

impl EdgeFrame {
    pub fn new(patch: usize, side: Side, reversed: bool) -> Self {
        EdgeFrame {
            patch,
            side,
            reversed,
        }
    }

    /// Patch parameter of the local point `(d, t)`.
    pub fn param(&self, d: f64, t: f64) -> [f64; 2] {
        let dd = if self.side.at_one() { 1.0 - d } else { d };
        let tt = if self.reversed { 1.0 - t } else { t };
        if self.side.axis() == 0 {
            [dd, tt]
        } else {
            [tt, dd]
        }
    }

    /// Coefficient index `(j1, j2)` of local index `(di, ti)`.
    pub fn index(&self, di: usize, ti: usize, n: usize) -> (usize, usize) {
        let a = if self.side.at_one() { n - 1 - di } else { di };
        let b = if self.reversed { n - 1 - ti } else { ti };
        if self.side.axis() == 0 {
            (a, b)
        } else {
            (b, a)
        }
    }

    /// Flat coefficient index within the patch.
    pub fn flat(&self, di: usize, ti: usize, n: usize) -> usize {
        let (j1, j2) = self.index(di, ti, n);
        j1 * n + j2
    }

    /// Patch corner at `t = end`.
    pub fn corner(&self, end: usize) -> Corner {
        let p = self.param(0.0, end as f64);
        Corner {
            patch: self.patch,
            c: [p[0].round() as u8, p[1].round() as u8],
        }
    }

    /// Re-expresses patch derivatives as local derivatives: `out.d[a][b] = d_d^a d_t^b`.
    pub fn local_jet(&self, jet: &Jet) -> Jet {
        let sd: f64 = if self.side.at_one() { -1.0 } else { 1.0 };
        let st: f64 = if self.reversed { -1.0 } else { 1.0 };
        let mut out = Jet::default();
        for a in 0..3 {
            for b in 0..3 - a {
                let src = if self.side.axis() == 0 {
                    jet.d[a][b]
                } else {
                    jet.d[b][a]
                };
                let s = sd.powi(a as i32) * st.powi(b as i32);
                out.d[a][b] = crate::vec3::scale(s, src);
            }
        }
        out
    }
}
