//! Fixed degree-5 Gauss rules on segments and triangles.

use crate::error::{Error, Result};
use crate::mesh::Point;

/// Quadrature on the unit interval, weights normalized to sum to one.
#[derive(Debug, Clone, Copy)]
pub struct SegmentRule {
    pub nodes: &'static [f64],
    pub weights: &'static [f64],
}

/// Quadrature on a triangle in barycentric coordinates, weights summing to one.
#[derive(Debug, Clone, Copy)]
pub struct TriangleRule {
    pub nodes: &'static [[f64; 3]],
    pub weights: &'static [f64],
}

// 3-point Gauss-Legendre mapped to [0, 1]
const G3_A: f64 = 0.112_701_665_379_258_31; // (1 - sqrt(3/5)) / 2
const G3_B: f64 = 0.887_298_334_620_741_7; // (1 + sqrt(3/5)) / 2

pub const GAUSS3: SegmentRule = SegmentRule {
    nodes: &[G3_A, 0.5, G3_B],
    weights: &[5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0],
};

// 7-point degree-5 rule (Radon)
const R7_A1: f64 = 0.059_715_871_789_769_82; // (9 - 2 sqrt(15)) / 21
const R7_B1: f64 = 0.470_142_064_105_115_1; // (6 + sqrt(15)) / 21
const R7_A2: f64 = 0.797_426_985_353_087_3; // (9 + 2 sqrt(15)) / 21
const R7_B2: f64 = 0.101_286_507_323_456_34; // (6 - sqrt(15)) / 21
const R7_W1: f64 = 0.132_394_152_788_506_2; // (155 + sqrt(15)) / 1200
const R7_W2: f64 = 0.125_939_180_544_827_15; // (155 - sqrt(15)) / 1200

pub const RADON7: TriangleRule = TriangleRule {
    nodes: &[
        [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
        [R7_A1, R7_B1, R7_B1],
        [R7_B1, R7_A1, R7_B1],
        [R7_B1, R7_B1, R7_A1],
        [R7_A2, R7_B2, R7_B2],
        [R7_B2, R7_A2, R7_B2],
        [R7_B2, R7_B2, R7_A2],
    ],
    weights: &[0.225, R7_W1, R7_W1, R7_W1, R7_W2, R7_W2, R7_W2],
};

#[inline]
pub fn lerp(p: Point, q: Point, t: f64) -> Point {
    [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]
}

#[inline]
pub fn barycentric_point(tri: &[Point; 3], l: &[f64; 3]) -> Point {
    [
        l[0] * tri[0][0] + l[1] * tri[1][0] + l[2] * tri[2][0],
        l[0] * tri[0][1] + l[1] * tri[1][1] + l[2] * tri[2][1],
    ]
}

pub fn triangle_area(tri: &[Point; 3]) -> f64 {
    0.5 * ((tri[1][0] - tri[0][0]) * (tri[2][1] - tri[0][1])
        - (tri[1][1] - tri[0][1]) * (tri[2][0] - tri[0][0]))
        .abs()
}

fn checked(p: Point, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Evaluation {
            x: p[0],
            y: p[1],
            value,
        })
    }
}

impl SegmentRule {
    /// `Σ w_i f(x_i) · |q - p|`, with `f` receiving the point and its parameter in [0, 1].
    pub fn integrate<F>(&self, p: Point, q: Point, mut f: F) -> Result<f64>
    where
        F: FnMut(Point, f64) -> f64,
    {
        let len = ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt();
        let mut sum = 0.0;
        for (&t, &w) in self.nodes.iter().zip(self.weights) {
            let x = lerp(p, q, t);
            sum += w * checked(x, f(x, t))?;
        }
        Ok(sum * len)
    }
}

impl TriangleRule {
    /// `Σ w_i f(x_i) · |T|`, with `f` receiving the point and its barycentric coordinates.
    pub fn integrate<F>(&self, tri: &[Point; 3], mut f: F) -> Result<f64>
    where
        F: FnMut(Point, &[f64; 3]) -> f64,
    {
        let area = triangle_area(tri);
        let mut sum = 0.0;
        for (l, &w) in self.nodes.iter().zip(self.weights) {
            let x = barycentric_point(tri, l);
            sum += w * checked(x, f(x, l))?;
        }
        Ok(sum * area)
    }

    /// Integrates `f` over `tri`, splitting any triangle with a vertex at one of
    /// `singular` into four congruent children, up to `depth` levels.
    pub fn integrate_subdivided<F>(
        &self,
        tri: &[Point; 3],
        singular: &[Point],
        depth: u32,
        f: &mut F,
    ) -> Result<f64>
    where
        F: FnMut(Point) -> f64,
    {
        let touches = singular.iter().any(|s| tri.iter().any(|v| near(*v, *s)));
        if depth == 0 || !touches {
            return self.integrate(tri, |x, _| f(x));
        }
        let m01 = lerp(tri[0], tri[1], 0.5);
        let m12 = lerp(tri[1], tri[2], 0.5);
        let m20 = lerp(tri[2], tri[0], 0.5);
        let children = [
            [tri[0], m01, m20],
            [m01, tri[1], m12],
            [m20, m12, tri[2]],
            [m01, m12, m20],
        ];
        let mut sum = 0.0;
        for child in &children {
            sum += self.integrate_subdivided(child, singular, depth - 1, f)?;
        }
        Ok(sum)
    }
}

fn near(p: Point, q: Point) -> bool {
    let scale = 1.0 + p[0].abs().max(p[1].abs());
    (p[0] - q[0]).abs() <= 1e-14 * scale && (p[1] - q[1]).abs() <= 1e-14 * scale
}

/// Integral of `f` over the segment `p–q` with the default rule.
pub fn integrate_segment<F: FnMut(Point, f64) -> f64>(p: Point, q: Point, f: F) -> Result<f64> {
    GAUSS3.integrate(p, q, f)
}

/// Integral of `f` over a triangle with the default rule.
pub fn integrate_triangle<F: FnMut(Point) -> f64>(tri: &[Point; 3], mut f: F) -> Result<f64> {
    RADON7.integrate(tri, |x, _| f(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    const REF: [Point; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    #[test]
    fn segment_examples() {
        let two = integrate_segment([0.0, 0.0], [2.0, 0.0], |_, _| 1.0).unwrap();
        assert!((two - 2.0).abs() < 1e-15);
        let t2 = integrate_segment([0.0, 0.0], [1.0, 0.0], |x, _| x[0] * x[0]).unwrap();
        assert!((t2 - 1.0 / 3.0).abs() < 1e-13);
        let t5 = integrate_segment([0.0, 0.0], [1.0, 0.0], |x, _| x[0].powi(5)).unwrap();
        assert!((t5 - 1.0 / 6.0).abs() < 1e-13);
    }

    #[test]
    fn segment_monomial_exactness() {
        for k in 0..=5 {
            let v = GAUSS3
                .integrate([0.0, 0.0], [1.0, 0.0], |_, t| t.powi(k))
                .unwrap();
            assert!((v - 1.0 / f64::from(k + 1)).abs() < 1e-13, "t^{k}");
        }
        assert!((GAUSS3.weights.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn triangle_examples() {
        let one = integrate_triangle(&REF, |_| 1.0).unwrap();
        assert!((one - 0.5).abs() < 1e-15);
        let x = integrate_triangle(&REF, |p| p[0]).unwrap();
        assert!((x - 1.0 / 6.0).abs() < 1e-15);
        let x2y2 = integrate_triangle(&REF, |p| p[0] * p[0] * p[1] * p[1]).unwrap();
        assert!((x2y2 - 1.0 / 180.0).abs() < 1e-13);
    }

    #[test]
    fn triangle_barycentric_monomial_exactness() {
        // ∫_T λ1^a λ2^b λ3^c = 2|T| a! b! c! / (a+b+c+2)!
        for a in 0..=5u32 {
            for b in 0..=(5 - a) {
                for c in 0..=(5 - a - b) {
                    let v = RADON7
                        .integrate(&REF, |_, l| {
                            l[0].powi(a as i32) * l[1].powi(b as i32) * l[2].powi(c as i32)
                        })
                        .unwrap();
                    let exact =
                        factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 2);
                    assert!((v - exact).abs() < 1e-13, "({a},{b},{c})");
                }
            }
        }
        assert!(RADON7.weights.iter().all(|&w| w > 0.0));
        assert!((RADON7.weights.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn non_finite_values_are_reported() {
        let err = integrate_triangle(&REF, |_| f64::NAN).unwrap_err();
        assert!(matches!(err, Error::Evaluation { .. }));
        let err = integrate_segment([0.0, 0.0], [1.0, 0.0], |_, _| f64::INFINITY).unwrap_err();
        assert!(matches!(err, Error::Evaluation { .. }));
    }

    #[test]
    fn subdivision_of_singular_integrand() {
        // ∫_T r^{-6/7} over the reference triangle: only the corner triangle is refined
        let mut f = |p: Point| (p[0] * p[0] + p[1] * p[1]).powf(-3.0 / 7.0);
        let plain = RADON7
            .integrate_subdivided(&REF, &[[0.0, 0.0]], 0, &mut f)
            .unwrap();
        let deep = RADON7
            .integrate_subdivided(&REF, &[[0.0, 0.0]], 8, &mut f)
            .unwrap();
        let shallow = RADON7
            .integrate_subdivided(&REF, &[[0.0, 0.0]], 3, &mut f)
            .unwrap();
        assert!((shallow - deep).abs() < (plain - deep).abs());
        // smooth integrands are unaffected by subdivision
        let mut g = |p: Point| p[0] * p[1];
        let a = RADON7
            .integrate_subdivided(&REF, &[[0.0, 0.0]], 3, &mut g)
            .unwrap();
        assert!((a - 1.0 / 24.0).abs() < 1e-14);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn affine_invariance(
                ox in -3.0..3.0f64, oy in -3.0..3.0f64,
                a in 0.2..2.0f64, b in -1.0..1.0f64, c in -1.0..1.0f64, d in 0.2..2.0f64,
            ) {
                prop_assume!((a * d - b * c).abs() > 0.05);
                let map = |p: Point| [ox + a * p[0] + b * p[1], oy + c * p[0] + d * p[1]];
                let tri = REF.map(map);
                let det = (a * d - b * c).abs();
                let f = |p: Point| (p[0] * 0.7).sin() + p[1] * p[1] * p[0];
                let physical = integrate_triangle(&tri, f).unwrap();
                let pulled = integrate_triangle(&REF, |p| f(map(p))).unwrap() * det;
                prop_assert!((physical - pulled).abs() <= 1e-12 * (1.0 + physical.abs()));
            }
        }
    }
}
