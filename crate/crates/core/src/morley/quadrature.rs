use crate::scalar::Scalar;

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Newton on P_n starting from the Chebyshev-like guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = 0.5 * (1.0 - x);
        weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Quadrature rule on a triangle in barycentric coordinates. Weights sum to
/// one, so integrals are `area × Σ wᵢ f(xᵢ)`. All points are strictly
/// interior, so no rule ever samples a vertex.
#[derive(Debug, Clone)]
pub struct QuadratureRule<T> {
    points: Vec<[T; 3]>,
    weights: Vec<T>,
    degree: usize,
}

impl<T: Scalar> QuadratureRule<T> {
    /// Collapsed (Duffy) tensor product of Gauss–Legendre rules, exact for
    /// polynomials of total degree `degree`.
    pub fn with_degree(degree: usize) -> Self {
        // A degree-d polynomial pulls back to degree d+1 in the collapsed
        // direction (Jacobian factor), so n Gauss points with 2n-1 >= d+1.
        let n = (degree + 2).div_ceil(2).max(1);
        let (nodes, w) = gauss_legendre_unit(n);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for i in 0..n {
            let s = nodes[i];
            for j in 0..n {
                let t = nodes[j];
                let x = s;
                let y = t * (1.0 - s);
                points.push([T::lit(1.0 - x - y), T::lit(x), T::lit(y)]);
                weights.push(T::lit(2.0 * w[i] * w[j] * (1.0 - s)));
            }
        }
        Self { points, weights, degree }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn barycentric(&self) -> &[[T; 3]] {
        &self.points
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Physical quadrature points on the triangle with the given corners.
    pub fn points_on(&self, corners: &[[T; 2]; 3]) -> impl Iterator<Item = [T; 2]> + '_ {
        let corners = *corners;
        self.points.iter().map(move |b| to_physical(&corners, b))
    }

    pub fn integrate(&self, corners: &[[T; 2]; 3], f: impl Fn([T; 2]) -> T) -> T {
        let area = crate::mesh::signed_area(corners[0], corners[1], corners[2]);
        let sum: T = self.points_on(corners).zip(&self.weights).map(|(p, &w)| w * f(p)).sum();
        area * sum
    }
}

pub fn to_physical<T: Scalar>(corners: &[[T; 2]; 3], b: &[T; 3]) -> [T; 2] {
    [
        b[0] * corners[0][0] + b[1] * corners[1][0] + b[2] * corners[2][0],
        b[0] * corners[0][1] + b[1] * corners[1][1] + b[2] * corners[2][1],
    ]
}
