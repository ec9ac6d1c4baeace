use super::{Triangle, Triangulation};
use crate::scalar::Scalar;

/// Which diagonal splits each square cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Diagonal {
    /// From the lower-left to the upper-right corner.
    #[default]
    Rising,
    /// From the upper-left to the lower-right corner.
    Falling,
    /// Every diagonal passes through the cell corner closest to the origin.
    TowardOrigin,
}

/// Structured `n × n` mesh of the unit square, every cell split by the rising diagonal.
pub fn generate_square_mesh<T: Scalar>(n: usize) -> Triangulation<T> {
    generate_square_mesh_with(n, Diagonal::Rising)
}

pub fn generate_square_mesh_with<T: Scalar>(n: usize, diagonal: Diagonal) -> Triangulation<T> {
    assert!(n >= 1, "square mesh needs at least one cell per side");
    let step = T::one() / T::from_usize(n).unwrap();
    let cells: Vec<(usize, usize)> = (0..n).flat_map(|j| (0..n).map(move |i| (i, j))).collect();
    grid_mesh([T::zero(), T::zero()], step, n, n, &cells, diagonal)
}

/// L-shaped domain `(-1,1)² \ [0,1)×(-1,0]` with 24 triangles: each of the
/// three unit quadrants is cut into four squares of side 0.5, each split in two.
pub fn generate_lshape_mesh<T: Scalar>() -> Triangulation<T> {
    generate_lshape_mesh_with(Diagonal::Rising)
}

pub fn generate_lshape_mesh_with<T: Scalar>(diagonal: Diagonal) -> Triangulation<T> {
    // Lattice of side 0.5 anchored at (-1,-1): cells (i,j) with i,j in 0..4,
    // dropping the lower-right quadrant i >= 2, j < 2.
    let cells: Vec<(usize, usize)> = (0..4)
        .flat_map(|j| (0..4).map(move |i| (i, j)))
        .filter(|&(i, j)| !(i >= 2 && j < 2))
        .collect();
    grid_mesh([-T::one(), -T::one()], T::lit(0.5), 4, 4, &cells, diagonal)
}

fn grid_mesh<T: Scalar>(
    origin: [T; 2],
    step: T,
    nx: usize,
    ny: usize,
    cells: &[(usize, usize)],
    diagonal: Diagonal,
) -> Triangulation<T> {
    let node = |i: usize, j: usize| j * (nx + 1) + i;
    let mut used = vec![false; (nx + 1) * (ny + 1)];
    for &(i, j) in cells {
        for (di, dj) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
            used[node(i + di, j + dj)] = true;
        }
    }
    let mut renumber = vec![usize::MAX; used.len()];
    let mut vertices = Vec::new();
    for j in 0..=ny {
        for i in 0..=nx {
            if used[node(i, j)] {
                renumber[node(i, j)] = vertices.len();
                vertices.push([
                    origin[0] + step * T::from_usize(i).unwrap(),
                    origin[1] + step * T::from_usize(j).unwrap(),
                ]);
            }
        }
    }

    let mut triangles = Vec::with_capacity(cells.len() * 2);
    for &(i, j) in cells {
        let v00 = renumber[node(i, j)];
        let v10 = renumber[node(i + 1, j)];
        let v01 = renumber[node(i, j + 1)];
        let v11 = renumber[node(i + 1, j + 1)];
        let rising = match diagonal {
            Diagonal::Rising => true,
            Diagonal::Falling => false,
            Diagonal::TowardOrigin => {
                // Cell centre relative to the origin decides which corner is nearest.
                let cx = origin[0] + step * (T::from_usize(i).unwrap() + T::lit(0.5));
                let cy = origin[1] + step * (T::from_usize(j).unwrap() + T::lit(0.5));
                (cx > T::zero()) == (cy > T::zero())
            }
        };
        if rising {
            triangles.push(Triangle::new([v00, v10, v11]));
            triangles.push(Triangle::new([v00, v11, v01]));
        } else {
            triangles.push(Triangle::new([v00, v10, v01]));
            triangles.push(Triangle::new([v10, v11, v01]));
        }
    }
    Triangulation::new(vertices, triangles)
        .expect("structured grid is a valid triangulation")
        .with_longest_edge_refinement()
}
