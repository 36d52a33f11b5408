//! Geometry of the Poincaré disk model of H² (curvature −1).
//!
//! Tangent vectors are expressed in the orthonormal frame
//! `e_k = (1 - |z|²)/2 · ∂_k` and packed into a complex number
//! `v = v₁ + i v₂`. Orientation-preserving isometries act on these frame
//! components by a rotation, so transports reduce to phases.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Möbius transformation `z ↦ (a z + b)/(c z + d)` with `ad - bc = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mobius {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl Mobius {
    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Self {
            a: one,
            b: zero,
            c: zero,
            d: one,
        }
    }

    /// Rotation by `theta` about the origin.
    pub fn rotation(theta: f64) -> Self {
        let h = Complex64::from_polar(1.0, theta / 2.0);
        Self {
            a: h,
            b: Complex64::new(0.0, 0.0),
            c: Complex64::new(0.0, 0.0),
            d: h.conj(),
        }
    }

    /// Transvection `z ↦ (z + p)/(1 + p̄ z)` moving 0 to `p`.
    pub fn transvection(p: Complex64) -> Self {
        let s = 1.0 / (1.0 - p.norm_sqr()).sqrt();
        Self {
            a: Complex64::new(s, 0.0),
            b: p * s,
            c: p.conj() * s,
            d: Complex64::new(s, 0.0),
        }
    }

    pub fn apply(&self, z: Complex64) -> Complex64 {
        (self.a * z + self.b) / (self.c * z + self.d)
    }

    pub fn derivative(&self, z: Complex64) -> Complex64 {
        let den = self.c * z + self.d;
        1.0 / (den * den)
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Mobius) -> Mobius {
        Mobius {
            a: self.a * other.a + self.b * other.c,
            b: self.a * other.b + self.b * other.d,
            c: self.c * other.a + self.d * other.c,
            d: self.c * other.b + self.d * other.d,
        }
    }

    pub fn inverse(&self) -> Mobius {
        Mobius {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    pub fn trace(&self) -> Complex64 {
        self.a + self.d
    }

    /// Distance to `±identity` in the max-entry norm.
    pub fn distance_to_identity(&self) -> f64 {
        let id = Mobius::identity();
        let diff = |s: f64| {
            [
                (self.a - id.a * s).norm(),
                (self.b).norm(),
                (self.c).norm(),
                (self.d - id.d * s).norm(),
            ]
            .into_iter()
            .fold(0.0_f64, f64::max)
        };
        diff(1.0).min(diff(-1.0))
    }

    /// Frame rotation angle of this isometry at `z`.
    pub fn frame_angle(&self, z: Complex64) -> f64 {
        self.derivative(z).arg()
    }

    /// Real `SL(2, ℝ)` matrix acting on the upper half-plane, obtained by
    /// conjugating with the Cayley transform.
    pub fn to_real_matrix(&self) -> [[f64; 2]; 2] {
        // C(w) = (w - i)/(w + i) maps the half-plane to the disk; the real
        // matrix is C⁻¹ M C.
        let i = Complex64::new(0.0, 1.0);
        let one = Complex64::new(1.0, 0.0);
        let cay = Mobius {
            a: one,
            b: -i,
            c: one,
            d: i,
        };
        let cay_inv = Mobius {
            a: i,
            b: i,
            c: -one,
            d: one,
        };
        let m = cay_inv.compose(self).compose(&cay);
        let s = (m.a * m.d - m.b * m.c).sqrt();
        let entries = [m.a / s, m.b / s, m.c / s, m.d / s];
        // Entries are real up to a common unit factor.
        let big = entries
            .iter()
            .copied()
            .fold(Complex64::new(0.0, 0.0), |acc, e| {
                if e.norm() > acc.norm() {
                    e
                } else {
                    acc
                }
            });
        let phase = Complex64::from_polar(1.0, -big.arg());
        let r: Vec<f64> = entries.iter().map(|e| (e * phase).re).collect();
        [[r[0], r[1]], [r[2], r[3]]]
    }
}

/// Hyperbolic area density `λ(z) = 4/(1 - |z|²)²`.
pub fn area_density(z: Complex64) -> f64 {
    let s = 1.0 - z.norm_sqr();
    4.0 / (s * s)
}

/// `∂_z log λ(z) = 2 z̄/(1 - |z|²)`.
pub fn d_log_area_density(z: Complex64) -> Complex64 {
    2.0 * z.conj() / (1.0 - z.norm_sqr())
}

/// Frame scale `(1 - |z|²)/2`: Euclidean length of a unit tangent vector.
pub fn frame_scale(z: Complex64) -> f64 {
    (1.0 - z.norm_sqr()) / 2.0
}

fn to_origin(p: Complex64, q: Complex64) -> Complex64 {
    (q - p) / (Complex64::new(1.0, 0.0) - p.conj() * q)
}

pub fn distance(p: Complex64, q: Complex64) -> f64 {
    2.0 * to_origin(p, q).norm().atanh()
}

/// Riemannian logarithm `log_p(q)` in the orthonormal frame at `p`.
pub fn log(p: Complex64, q: Complex64) -> Complex64 {
    let w = to_origin(p, q);
    let r = w.norm();
    if r == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    w * (2.0 * r.atanh() / r)
}

/// Riemannian exponential `exp_p(v)` with `v` in the frame at `p`.
pub fn exp(p: Complex64, v: Complex64) -> Complex64 {
    let r = v.norm();
    if r == 0.0 {
        return p;
    }
    let w = v * ((r / 2.0).tanh() / r);
    Mobius::transvection(p).apply(w)
}

/// Rotation angle of parallel transport along the geodesic from `p` to `q`,
/// in the orthonormal frames at both ends.
pub fn transport_angle(p: Complex64, q: Complex64) -> f64 {
    let w = to_origin(p, q);
    let t = Mobius::transvection(p)
        .compose(&Mobius::transvection(w))
        .compose(&Mobius::transvection(-p));
    t.frame_angle(p)
}

/// Parallel transport of a frame vector `v` at `p` to `q`.
pub fn transport(p: Complex64, q: Complex64, v: Complex64) -> Complex64 {
    v * Complex64::from_polar(1.0, transport_angle(p, q))
}

/// Interior angle at `b` of the geodesic triangle `a b c`.
pub fn geodesic_angle(a: Complex64, b: Complex64, c: Complex64) -> f64 {
    let u = log(b, a);
    let v = log(b, c);
    (v / u).arg().abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn exp_log_roundtrip() {
        let p = c(0.3, -0.4);
        for v in [c(0.1, 0.2), c(-1.5, 0.7), c(2.0, -3.0)] {
            let q = exp(p, v);
            assert!((log(p, q) - v).norm() < 1e-12);
            assert!((distance(p, q) - v.norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn log_is_antisymmetric_through_transport() {
        let (p, q) = (c(0.2, 0.5), c(-0.6, 0.1));
        let back = transport(p, q, log(p, q));
        assert!((back + log(q, p)).norm() < 1e-12);
    }

    #[test]
    fn transvection_is_isometry() {
        let g = Mobius::transvection(c(0.4, 0.3)).compose(&Mobius::rotation(1.1));
        let (p, q) = (c(0.1, 0.1), c(-0.5, 0.2));
        assert!((distance(g.apply(p), g.apply(q)) - distance(p, q)).abs() < 1e-12);
        // Frame components rotate by arg g'.
        let v = log(p, q);
        let moved = log(g.apply(p), g.apply(q));
        let rotated = v * Complex64::from_polar(1.0, g.frame_angle(p));
        assert!((moved - rotated).norm() < 1e-12);
    }

    #[test]
    fn compose_and_inverse() {
        let g = Mobius::transvection(c(0.5, -0.1)).compose(&Mobius::rotation(0.3));
        let id = g.compose(&g.inverse());
        assert!(id.distance_to_identity() < 1e-14);
    }

    #[test]
    fn equilateral_angle_sum_below_pi() {
        let r = 0.5;
        let pts: Vec<_> = (0..3)
            .map(|k| Complex64::from_polar(r, 2.0 * PI * k as f64 / 3.0))
            .collect();
        let sum = geodesic_angle(pts[2], pts[0], pts[1])
            + geodesic_angle(pts[0], pts[1], pts[2])
            + geodesic_angle(pts[1], pts[2], pts[0]);
        assert!(sum < PI);
    }

    #[test]
    fn real_matrix_has_unit_determinant() {
        let g = Mobius::transvection(c(0.5, 0.2)).compose(&Mobius::rotation(0.7));
        let m = g.to_real_matrix();
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        assert!((det - 1.0).abs() < 1e-12);
        let tr = m[0][0] + m[1][1];
        assert!((tr.abs() - g.trace().re.abs()).abs() < 1e-12);
    }
}
