//! Pointwise partial derivatives up to order four and the closed-form
//! fields of the manufactured examples.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::morley::{ExactFn, Sym2};

/// All partial derivatives `∂ₓⁱ ∂ᵧʲ u(p)` with `i + j ≤ 4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    d: [[f64; 5]; 5],
}

const BINOM: [[f64; 5]; 5] = [
    [1.0, 0.0, 0.0, 0.0, 0.0],
    [1.0, 1.0, 0.0, 0.0, 0.0],
    [1.0, 2.0, 1.0, 0.0, 0.0],
    [1.0, 3.0, 3.0, 1.0, 0.0],
    [1.0, 4.0, 6.0, 4.0, 1.0],
];

impl Jet {
    pub fn zero() -> Self {
        Self { d: [[0.0; 5]; 5] }
    }

    /// Jet of `a(x) b(y)` from the one-dimensional derivatives of each factor.
    pub fn tensor(a: [f64; 5], b: [f64; 5]) -> Self {
        let mut out = Self::zero();
        for i in 0..5 {
            for j in 0..5 - i {
                out.d[i][j] = a[i] * b[j];
            }
        }
        out
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        assert!(i + j <= 4, "derivative order {} above four", i + j);
        self.d[i][j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(i + j <= 4, "derivative order {} above four", i + j);
        self.d[i][j] = v;
    }

    pub fn value(&self) -> f64 {
        self.d[0][0]
    }

    pub fn gradient(&self) -> [f64; 2] {
        [self.d[1][0], self.d[0][1]]
    }

    pub fn hessian(&self) -> Sym2<f64> {
        [self.d[2][0], self.d[1][1], self.d[0][2]]
    }

    pub fn bilaplacian(&self) -> f64 {
        self.d[4][0] + 2.0 * self.d[2][2] + self.d[0][4]
    }

    /// Leibniz rule.
    pub fn product(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for i in 0..5 {
            for j in 0..5 - i {
                let mut s = 0.0;
                for a in 0..=i {
                    for b in 0..=j {
                        s += BINOM[i][a] * BINOM[j][b] * self.d[a][b] * other.d[i - a][j - b];
                    }
                }
                out.d[i][j] = s;
            }
        }
        out
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = *self;
        out.d.iter_mut().flatten().for_each(|v| *v *= c);
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = *self;
        for (a, b) in out.d.iter_mut().flatten().zip(other.d.iter().flatten()) {
            *a += b;
        }
        out
    }
}

/// Von Kármán bracket of two fields at a point.
pub fn bracket_at(a: &Jet, b: &Jet) -> f64 {
    crate::morley::bracket(&a.hessian(), &b.hessian())
}

/// A smooth (away from isolated points) scalar field given by its jets.
pub trait SmoothField: Send + Sync {
    fn jet(&self, p: [f64; 2]) -> Jet;
}

/// View of a [`SmoothField`] as an interpolation and error-norm target.
pub struct Exact<'a>(pub &'a dyn SmoothField);

impl ExactFn for Exact<'_> {
    fn value(&self, p: [f64; 2]) -> f64 {
        self.0.jet(p).value()
    }
    fn gradient(&self, p: [f64; 2]) -> [f64; 2] {
        self.0.jet(p).gradient()
    }
    fn hessian(&self, p: [f64; 2]) -> Sym2<f64> {
        self.0.jet(p).hessian()
    }
}

/// `sin²(πt)` and its first four derivatives.
pub fn sin_squared(t: f64) -> [f64; 5] {
    let (s, c) = (2.0 * PI * t).sin_cos();
    [0.5 * (1.0 - c), PI * s, 2.0 * PI * PI * c, -4.0 * PI.powi(3) * s, -8.0 * PI.powi(4) * c]
}

/// `t²(1 − t)²` and its first four derivatives.
pub fn bubble(t: f64) -> [f64; 5] {
    [
        t * t * (1.0 - t) * (1.0 - t),
        2.0 * t - 6.0 * t * t + 4.0 * t.powi(3),
        2.0 - 12.0 * t + 12.0 * t * t,
        -12.0 + 24.0 * t,
        24.0,
    ]
}

/// `(t² − 1)²` and its first four derivatives.
pub fn cutoff(t: f64) -> [f64; 5] {
    [(t * t - 1.0).powi(2), 4.0 * t.powi(3) - 4.0 * t, 12.0 * t * t - 4.0, 24.0 * t, 24.0]
}

/// `a(x) a(y)` for a one-dimensional profile `a`.
#[derive(Clone, Copy)]
pub struct TensorField(pub fn(f64) -> [f64; 5]);

impl SmoothField for TensorField {
    fn jet(&self, p: [f64; 2]) -> Jet {
        Jet::tensor((self.0)(p[0]), (self.0)(p[1]))
    }
}

/// Polar angle in `[0, 2π)`.
pub fn polar_angle(p: [f64; 2]) -> f64 {
    let t = p[1].atan2(p[0]);
    if t < 0.0 {
        t + 2.0 * PI
    } else {
        t
    }
}

/// Jets of `Re z^λ` and `Im z^λ` with the branch cut along the positive
/// real axis. Derivatives follow from `∂ₓ = d/dz` and `∂ᵧ = i d/dz`.
fn power_jets(lambda: f64, p: [f64; 2]) -> (Jet, Jet) {
    let r = p[0].hypot(p[1]);
    let t = polar_angle(p);
    let (mut re, mut im) = (Jet::zero(), Jet::zero());
    let mut falling = 1.0;
    for n in 0..5 {
        let mu = lambda - n as f64;
        let f = Complex64::from_polar(falling * r.powf(mu), mu * t);
        let mut c = f;
        for j in 0..=n {
            re.d[n - j][j] = c.re;
            im.d[n - j][j] = c.im;
            c *= Complex64::i();
        }
        falling *= mu;
    }
    (re, im)
}

/// The biharmonic corner singularity `r^{1+γ} g_{γ,ω}(θ)` of a re-entrant
/// corner with interior angle `ω`.
#[derive(Debug, Clone, Copy)]
pub struct CornerSingularity {
    pub gamma: f64,
    pub omega: f64,
}

impl CornerSingularity {
    /// Angular profile `g_{γ,ω}(θ)`.
    pub fn angular(&self, theta: f64) -> f64 {
        let (g, w) = (self.gamma, self.omega);
        let a = ((g - 1.0) * w).sin() / (g - 1.0) - ((g + 1.0) * w).sin() / (g + 1.0);
        let b = ((g - 1.0) * w).cos() - ((g + 1.0) * w).cos();
        a * (((g - 1.0) * theta).cos() - ((g + 1.0) * theta).cos())
            - (((g - 1.0) * theta).sin() / (g - 1.0) - ((g + 1.0) * theta).sin() / (g + 1.0)) * b
    }
}

impl SmoothField for CornerSingularity {
    fn jet(&self, p: [f64; 2]) -> Jet {
        let (g, w) = (self.gamma, self.omega);
        let a = ((g - 1.0) * w).sin() / (g - 1.0) - ((g + 1.0) * w).sin() / (g + 1.0);
        let b = ((g - 1.0) * w).cos() - ((g + 1.0) * w).cos();
        // r^{1+γ} cos((γ−1)θ) = |z|² Re z^{γ−1} and r^{1+γ} cos((γ+1)θ) = Re z^{γ+1}.
        let (re_m, im_m) = power_jets(g - 1.0, p);
        let (re_p, im_p) = power_jets(g + 1.0, p);
        let mut r2 = Jet::zero();
        r2.d[0][0] = p[0] * p[0] + p[1] * p[1];
        r2.d[1][0] = 2.0 * p[0];
        r2.d[0][1] = 2.0 * p[1];
        r2.d[2][0] = 2.0;
        r2.d[0][2] = 2.0;
        let cos_part = r2.product(&re_m).add(&re_p.scale(-1.0));
        let sin_part = r2.product(&im_m).scale(1.0 / (g - 1.0)).add(&im_p.scale(-1.0 / (g + 1.0)));
        cos_part.scale(a).add(&sin_part.scale(-b))
    }
}

/// Pointwise product of two fields.
pub struct ProductField<A, B>(pub A, pub B);

impl<A: SmoothField, B: SmoothField> SmoothField for ProductField<A, B> {
    fn jet(&self, p: [f64; 2]) -> Jet {
        self.0.jet(p).product(&self.1.jet(p))
    }
}
