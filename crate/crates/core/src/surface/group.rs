use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::disk::Mobius;

/// Product of generators, read left to right: `[i, j]` is `g_i ∘ g_j`.
pub type Word = Vec<u8>;

/// Surface group acting on the Poincaré disk.
///
/// `generators[0..4]` are `a, b, c, d` and `generators[4..8]` their
/// inverses; `relation` is `a b a⁻¹ b⁻¹ c d c⁻¹ d⁻¹` as generator indices.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FuchsianGroup {
    pub generators: [Mobius; 8],
    pub relation: Word,
}

/// Index of the inverse of generator `g`.
pub fn inverse_index(g: u8) -> u8 {
    (g + 4) % 8
}

/// Hashable key of `±M`, entries rounded to multiples of `1/scale`.
pub(crate) fn mobius_key(m: &Mobius, scale: f64) -> [i64; 8] {
    let mut e = [
        m.a.re, m.a.im, m.b.re, m.b.im, m.c.re, m.c.im, m.d.re, m.d.im,
    ];
    let lead = e.iter().copied().find(|x| x.abs() > 1e-9).unwrap_or(1.0);
    if lead < 0.0 {
        e.iter_mut().for_each(|x| *x = -*x);
    }
    e.map(|x| (x * scale).round() as i64)
}

impl FuchsianGroup {
    pub fn from_generators(abcd: [Mobius; 4]) -> Self {
        let mut generators = [Mobius::identity(); 8];
        for k in 0..4 {
            generators[k] = abcd[k];
            generators[k + 4] = abcd[k].inverse();
        }
        Self {
            generators,
            relation: vec![0, 1, 4, 5, 2, 3, 6, 7],
        }
    }

    pub fn eval(&self, word: &[u8]) -> Mobius {
        word.iter().fold(Mobius::identity(), |acc, &g| {
            acc.compose(&self.generators[g as usize])
        })
    }

    /// Distance of the relation word from `±identity`.
    pub fn relation_defect(&self) -> f64 {
        self.eval(&self.relation).distance_to_identity()
    }

    pub fn all_hyperbolic(&self) -> bool {
        self.generators.iter().all(|g| g.trace().norm() > 2.0)
    }
}

/// Regular hyperbolic octagon with interior angles π/4, centred at 0.
///
/// Side `k` has its midpoint at angle `kπ/4` and runs between corners
/// `k-1` and `k`, where corner `k` sits at angle `kπ/4 + π/8`.
#[derive(Clone, Debug)]
pub struct Octagon {
    /// Euclidean radius of the corners in the disk.
    pub corner_radius: f64,
    /// Euclidean distance from 0 to the side midpoints.
    pub midpoint_radius: f64,
    pub corners: [Complex64; 8],
    /// `(from, to, generator)`: the generator maps side `from` onto side `to`.
    pub pairings: [(usize, usize, u8); 4],
}

impl Octagon {
    pub fn side_angle(k: usize) -> f64 {
        k as f64 * PI / 4.0
    }

    pub fn corner(&self, k: i64) -> Complex64 {
        self.corners[k.rem_euclid(8) as usize]
    }

    /// Corners at the ends of side `k`, in counter-clockwise order.
    pub fn side_corners(&self, k: usize) -> (Complex64, Complex64) {
        (self.corner(k as i64 - 1), self.corner(k as i64))
    }

    /// Hyperbolic area `(8 - 2)π - Σ angles`.
    pub fn area(&self) -> f64 {
        6.0 * PI - 8.0 * self.interior_angle()
    }

    /// Interior angle from the circumradius by hyperbolic trigonometry:
    /// `cosh R = cot(π/8) cot(θ/2)`.
    pub fn interior_angle(&self) -> f64 {
        let big_r = 2.0 * self.corner_radius.atanh();
        2.0 * (1.0 / (big_r.cosh() * (PI / 8.0).tan())).atan()
    }

    /// Geodesic circle carrying side `k`: returns (centre, radius).
    pub fn side_circle(&self, k: usize) -> (Complex64, f64) {
        let m = self.midpoint_radius;
        let dist = (1.0 + m * m) / (2.0 * m);
        (Complex64::from_polar(dist, Self::side_angle(k)), dist - m)
    }
}

/// The regular octagon group realising a closed genus-2 surface.
pub fn build_genus2_octagon() -> (FuchsianGroup, Octagon) {
    let cot = 1.0 / (PI / 8.0).tan();
    // Circumradius with all angles π/4, and inradius.
    let big_r = (cot * cot).acosh();
    let inradius = ((PI / 8.0).cos() / (PI / 8.0).sin()).acosh();
    let corner_radius = (big_r / 2.0).tanh();
    let midpoint_radius = (inradius / 2.0).tanh();
    let mut corners = [Complex64::new(0.0, 0.0); 8];
    for (k, c) in corners.iter_mut().enumerate() {
        *c = Complex64::from_polar(corner_radius, k as f64 * PI / 4.0 + PI / 8.0);
    }
    // Side k -> side k+2: rotate side k to angle π, translate by twice
    // the inradius along the real axis, rotate to side k+2.
    let shift = Mobius::transvection(Complex64::new(inradius.tanh(), 0.0));
    let pairing = |k: usize| {
        Mobius::rotation(Octagon::side_angle(k + 2))
            .compose(&shift)
            .compose(&Mobius::rotation(PI - Octagon::side_angle(k)))
    };
    let a = pairing(0).inverse();
    let b = pairing(1);
    let c = pairing(4).inverse();
    let d = pairing(5);
    let group = FuchsianGroup::from_generators([a, b, c, d]);
    let octagon = Octagon {
        corner_radius,
        midpoint_radius,
        corners,
        pairings: [(0, 2, 4), (1, 3, 1), (4, 6, 6), (5, 7, 3)],
    };
    (group, octagon)
}
