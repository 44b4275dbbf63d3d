//! Periodic Cartesian mesh on the unit torus, cell-indexed fields and the
//! conserved state.
//!
//! Cell `(i, j)` (0-based) is centred at `(i hx, j hy)` and covers
//! `((i - 1/2) hx, (i + 1/2) hx] x ((j - 1/2) hy, (j + 1/2) hy]`. Values are
//! stored row-major with `i` running fastest.

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{NskError, Result};
use crate::real::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mesh<T> {
    m: usize,
    n: usize,
    hx: T,
    hy: T,
}

impl<T: Real> Mesh<T> {
    /// Builds an `m x n` mesh of the unit torus. Both counts must be at least 3.
    pub fn new(m: usize, n: usize) -> Result<Self> {
        if m < 3 || n < 3 {
            return Err(NskError::StencilWidth { m, n });
        }
        Ok(Mesh {
            m,
            n,
            hx: T::one() / T::lit(m as f64),
            hy: T::one() / T::lit(n as f64),
        })
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn hx(&self) -> T {
        self.hx
    }

    #[inline]
    pub fn hy(&self) -> T {
        self.hy
    }

    /// `max(hx, hy)`, the mesh size entering the artificial dissipation.
    #[inline]
    pub fn h(&self) -> T {
        self.hx.max(self.hy)
    }

    #[inline]
    pub fn h_min(&self) -> T {
        self.hx.min(self.hy)
    }

    /// Number of cells.
    #[inline]
    pub fn len(&self) -> usize {
        self.m * self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Flat offset of a logical, possibly out-of-range, index.
    #[inline]
    pub fn index(&self, i: isize, j: isize) -> usize {
        let i = i.rem_euclid(self.m as isize) as usize;
        let j = j.rem_euclid(self.n as isize) as usize;
        i + self.m * j
    }

    #[inline]
    pub fn cell_center(&self, i: usize, j: usize) -> (T, T) {
        (T::lit(i as f64) * self.hx, T::lit(j as f64) * self.hy)
    }

    pub fn same_shape(&self, other: &Mesh<T>) -> bool {
        self.m == other.m && self.n == other.n
    }

    pub(crate) fn check_same(&self, other: &Mesh<T>) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(NskError::MeshMismatch(self.m, self.n, other.m, other.n))
        }
    }
}

/// Piecewise-constant function on the torus, one value per cell.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField<T> {
    mesh: Mesh<T>,
    values: Vec<T>,
}

impl<T: Real> GridField<T> {
    pub fn new(mesh: Mesh<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != mesh.len() {
            return Err(NskError::LengthMismatch {
                expected: mesh.len(),
                got: values.len(),
            });
        }
        Ok(GridField { mesh, values })
    }

    pub fn constant(mesh: Mesh<T>, c: T) -> Self {
        GridField {
            mesh,
            values: vec![c; mesh.len()],
        }
    }

    pub fn zeros(mesh: Mesh<T>) -> Self {
        Self::constant(mesh, T::zero())
    }

    /// Fills each cell from its 0-based index pair.
    pub fn from_fn(mesh: Mesh<T>, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut values = Vec::with_capacity(mesh.len());
        for j in 0..mesh.n() {
            for i in 0..mesh.m() {
                values.push(f(i, j));
            }
        }
        GridField { mesh, values }
    }

    /// Samples a function at cell centres.
    pub fn sample(mesh: Mesh<T>, f: impl Fn(T, T) -> T) -> Self {
        Self::from_fn(mesh, |i, j| {
            let (x, y) = mesh.cell_center(i, j);
            f(x, y)
        })
    }

    #[inline]
    pub fn mesh(&self) -> &Mesh<T> {
        &self.mesh
    }

    #[inline]
    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    /// Periodic read: `(i + kM, j + lN)` resolves to `(i, j)`.
    #[inline]
    pub fn get(&self, i: isize, j: isize) -> T {
        self.values[self.mesh.index(i, j)]
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> T {
        self.values[i + self.mesh.m() * j]
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        GridField {
            mesh: self.mesh,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Cellwise combination of two fields on the same mesh.
    ///
    /// Panics if the meshes differ.
    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        assert!(
            self.mesh.same_shape(&other.mesh),
            "GridField mesh mismatch in cellwise operation"
        );
        GridField {
            mesh: self.mesh,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn scale(&self, c: T) -> Self {
        self.map(|v| c * v)
    }

    /// `self + c * other`.
    pub fn axpy(&self, c: T, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + c * b)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn min(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max(&self) -> T {
        self.values.iter().copied().fold(T::neg_infinity(), T::max)
    }

    /// Smallest value together with its cell.
    pub fn argmin(&self) -> (usize, usize, T) {
        let (k, v) =
            self.values
                .iter()
                .copied()
                .enumerate()
                .fold(
                    (0, T::infinity()),
                    |acc, (k, v)| if v < acc.1 { (k, v) } else { acc },
                );
        (k % self.mesh.m(), k / self.mesh.m(), v)
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |a, v| a.max(v.abs()))
    }

    /// Swaps the roles of the two axes. Only defined for square meshes.
    pub fn transpose(&self) -> Self {
        assert_eq!(
            self.mesh.m(),
            self.mesh.n(),
            "transpose needs a square mesh"
        );
        Self::from_fn(self.mesh, |i, j| self.at(j, i))
    }
}

macro_rules! field_binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl<T: Real> $trait<&GridField<T>> for &GridField<T> {
            type Output = GridField<T>;
            fn $method(self, rhs: &GridField<T>) -> GridField<T> {
                self.zip_map(rhs, |a, b| a $op b)
            }
        }

        impl<T: Real> $trait<GridField<T>> for GridField<T> {
            type Output = GridField<T>;
            fn $method(self, rhs: GridField<T>) -> GridField<T> {
                (&self).$method(&rhs)
            }
        }

        impl<T: Real> $trait<T> for &GridField<T> {
            type Output = GridField<T>;
            fn $method(self, rhs: T) -> GridField<T> {
                self.map(|a| a $op rhs)
            }
        }

        impl<T: Real> $trait<T> for GridField<T> {
            type Output = GridField<T>;
            fn $method(self, rhs: T) -> GridField<T> {
                (&self).$method(rhs)
            }
        }
    };
}

field_binop!(Add, add, +);
field_binop!(Sub, sub, -);
field_binop!(Mul, mul, *);

impl<T: Real> Neg for &GridField<T> {
    type Output = GridField<T>;
    fn neg(self) -> GridField<T> {
        self.map(|a| -a)
    }
}

impl<T: Real> Neg for GridField<T> {
    type Output = GridField<T>;
    fn neg(self) -> GridField<T> {
        -&self
    }
}

/// The conserved triple `(rho, rho u, rho v)`.
#[derive(Clone, Debug, PartialEq)]
pub struct State<T> {
    pub rho: GridField<T>,
    pub mx: GridField<T>,
    pub my: GridField<T>,
}

impl<T: Real> State<T> {
    pub fn new(rho: GridField<T>, mx: GridField<T>, my: GridField<T>) -> Result<Self> {
        rho.mesh().check_same(mx.mesh())?;
        rho.mesh().check_same(my.mesh())?;
        Ok(State { rho, mx, my })
    }

    /// Uniform state with density `rho` and velocity `(u, v)`.
    pub fn constant(mesh: Mesh<T>, rho: T, u: T, v: T) -> Self {
        State {
            rho: GridField::constant(mesh, rho),
            mx: GridField::constant(mesh, rho * u),
            my: GridField::constant(mesh, rho * v),
        }
    }

    #[inline]
    pub fn mesh(&self) -> &Mesh<T> {
        self.rho.mesh()
    }

    /// Fails with the first cell whose density is `<= floor`.
    pub fn check_positivity(&self, floor: T) -> Result<()> {
        let (i, j, v) = self.rho.argmin();
        if v <= floor || v.is_nan() {
            return Err(NskError::Positivity {
                i,
                j,
                value: v.as_f64(),
                floor: floor.as_f64(),
            });
        }
        Ok(())
    }

    /// Cellwise velocity `(mx / rho, my / rho)`.
    pub fn velocity(&self) -> Result<(GridField<T>, GridField<T>)> {
        self.check_positivity(T::zero())?;
        Ok((
            self.mx.zip_map(&self.rho, |m, r| m / r),
            self.my.zip_map(&self.rho, |m, r| m / r),
        ))
    }

    /// `a * self + b * other`, fieldwise.
    pub fn combine(&self, a: T, other: &Self, b: T) -> Self {
        let lin = |x: &GridField<T>, y: &GridField<T>| x.zip_map(y, |p, q| a * p + b * q);
        State {
            rho: lin(&self.rho, &other.rho),
            mx: lin(&self.mx, &other.mx),
            my: lin(&self.my, &other.my),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.rho.is_finite() && self.mx.is_finite() && self.my.is_finite()
    }
}

// 3-point Gauss-Legendre on [-1/2, 1/2].
fn gauss3<T: Real>() -> ([T; 3], [T; 3]) {
    let r = T::lit(0.6).sqrt() * T::lit(0.5);
    (
        [-r, T::zero(), r],
        [T::lit(5.0 / 18.0), T::lit(8.0 / 18.0), T::lit(5.0 / 18.0)],
    )
}

/// Sub-panels per cell and axis of the composite projection rule.
pub const PROJECTION_PANELS: usize = 2;

/// Cell averages of `f` by a composite Gauss-Legendre rule: each cell is split
/// into 2x2 panels with a 3x3 rule on each, so per-cell polynomials up to
/// degree 5 in each variable are integrated exactly.
pub fn project_to_cell_averages<T: Real>(f: impl Fn(T, T) -> T, mesh: Mesh<T>) -> GridField<T> {
    let (nodes, weights) = gauss3::<T>();
    let panels = PROJECTION_PANELS;
    let inv = T::one() / T::lit(panels as f64);
    let half = T::lit(0.5);
    let mut offsets = Vec::with_capacity(panels * 3);
    let mut ws = Vec::with_capacity(panels * 3);
    for p in 0..panels {
        let centre = (T::lit(p as f64) + half) * inv - half;
        for (q, w) in nodes.iter().zip(&weights) {
            offsets.push(centre + *q * inv);
            ws.push(*w * inv);
        }
    }
    GridField::from_fn(mesh, |i, j| {
        let (xc, yc) = mesh.cell_center(i, j);
        let mut acc = T::zero();
        for (oy, wy) in offsets.iter().zip(&ws) {
            let y = yc + *oy * mesh.hy();
            let mut row = T::zero();
            for (ox, wx) in offsets.iter().zip(&ws) {
                row = row + *wx * f(xc + *ox * mesh.hx(), y);
            }
            acc = acc + *wy * row;
        }
        acc
    })
}

/// Discrete initial data: cell averages of `rho0` and of the velocity,
/// momentum formed cellwise as `rho_h * u_h`.
pub fn project_initial_state<T: Real>(
    mesh: Mesh<T>,
    rho0: impl Fn(T, T) -> T,
    u0: impl Fn(T, T) -> T,
    v0: impl Fn(T, T) -> T,
) -> Result<State<T>> {
    let rho = project_to_cell_averages(rho0, mesh);
    let u = project_to_cell_averages(u0, mesh);
    let v = project_to_cell_averages(v0, mesh);
    let state = State {
        mx: &rho * &u,
        my: &rho * &v,
        rho,
    };
    state.check_positivity(T::zero())?;
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn mesh_spacings() {
        let m = Mesh::<f64>::new(4, 4).unwrap();
        assert_eq!((m.hx(), m.hy(), m.h()), (0.25, 0.25, 0.25));
        let m = Mesh::<f64>::new(8, 4).unwrap();
        assert_eq!((m.hx(), m.hy(), m.h()), (0.125, 0.25, 0.25));
        for (mm, nn) in [(3, 7), (10, 3), (17, 33)] {
            let m = Mesh::<f64>::new(mm, nn).unwrap();
            assert!((m.hx() * mm as f64 - 1.0).abs() <= f64::EPSILON);
            assert!((m.hy() * nn as f64 - 1.0).abs() <= f64::EPSILON);
        }
    }

    #[test]
    fn mesh_rejects_narrow_stencils() {
        assert!(matches!(
            Mesh::<f64>::new(2, 4),
            Err(NskError::StencilWidth { m: 2, n: 4 })
        ));
        assert!(Mesh::<f64>::new(4, 1).is_err());
    }

    #[test]
    fn periodic_reads_wrap() {
        let mesh = Mesh::<f64>::new(5, 3).unwrap();
        let f = GridField::from_fn(mesh, |i, j| (10 * i + j) as f64);
        for j in 0..3isize {
            for i in 0..5isize {
                for k in -2..=2isize {
                    for l in -2..=2isize {
                        assert_eq!(f.get(i + 5 * k, j + 3 * l), f.get(i, j));
                    }
                }
            }
        }
    }

    #[test]
    fn velocity_divides_cellwise() {
        let mesh = Mesh::<f64>::new(4, 4).unwrap();
        let s = State::constant(mesh, 2.0, 0.5, 0.0);
        let (u, v) = s.velocity().unwrap();
        assert!(u.values().iter().all(|&x| x == 0.5));
        assert!(v.values().iter().all(|&x| x == 0.0));

        let s = State::constant(mesh, 1.0, 0.0, 0.0);
        let (u, v) = s.velocity().unwrap();
        assert_eq!(u.max_abs() + v.max_abs(), 0.0);
    }

    #[test]
    fn velocity_rejects_vacuum() {
        let mesh = Mesh::<f64>::new(4, 4).unwrap();
        let mut s = State::constant(mesh, 1.0, 0.0, 0.0);
        let mut vals = s.rho.clone().into_values();
        vals[mesh.index(2, 1)] = 0.0;
        s.rho = GridField::new(mesh, vals).unwrap();
        match s.velocity() {
            Err(NskError::Positivity { i: 2, j: 1, .. }) => {}
            other => panic!("expected positivity error, got {other:?}"),
        }
    }

    #[test]
    fn state_rejects_mixed_meshes() {
        let a = Mesh::<f64>::new(4, 4).unwrap();
        let b = Mesh::<f64>::new(4, 5).unwrap();
        assert!(State::new(
            GridField::zeros(a),
            GridField::zeros(b),
            GridField::zeros(a)
        )
        .is_err());
    }

    #[test]
    fn projection_of_constant_is_exact() {
        for (m, n) in [(3, 3), (4, 4), (7, 12), (32, 16)] {
            let mesh = Mesh::<f64>::new(m, n).unwrap();
            let f = project_to_cell_averages(|_, _| 1.7, mesh);
            assert!(f
                .values()
                .iter()
                .all(|&v| (v - 1.7).abs() <= 4.0 * f64::EPSILON));
        }
    }

    #[test]
    fn projection_of_sine_matches_antiderivative() {
        let mesh = Mesh::<f64>::new(4, 4).unwrap();
        let f = project_to_cell_averages(|x, _| (2.0 * PI * x).sin(), mesh);
        let hx = mesh.hx();
        for j in 0..4 {
            for i in 0..4 {
                let xl = (i as f64 - 0.5) * hx;
                let xr = (i as f64 + 0.5) * hx;
                let exact = ((2.0 * PI * xl).cos() - (2.0 * PI * xr).cos()) / (2.0 * PI * hx);
                assert!((f.at(i, j) - exact).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn projection_of_quadratic_is_exact() {
        // Cells are evaluated in local coordinates, so x(1-x) is a per-cell
        // quadratic with average xc(1-xc) - hx^2/12.
        let mesh = Mesh::<f64>::new(8, 5).unwrap();
        let f = project_to_cell_averages(|x, _| x * (1.0 - x), mesh);
        let hx = mesh.hx();
        for j in 0..5 {
            for i in 0..8 {
                let xc = i as f64 * hx;
                let exact = xc * (1.0 - xc) - hx * hx / 12.0;
                assert!((f.at(i, j) - exact).abs() <= 1e-14);
            }
        }
    }

    #[test]
    fn projection_commutes_with_cell_translation() {
        let mesh = Mesh::<f64>::new(8, 6).unwrap();
        let f = |x: f64, y: f64| {
            (2.0 * PI * x).sin() * (4.0 * PI * y).cos() + 0.3 * (2.0 * PI * x).cos()
        };
        let hx = mesh.hx();
        let a = project_to_cell_averages(|x, y| f(x - hx, y), mesh);
        let b = project_to_cell_averages(f, mesh);
        for j in 0..6isize {
            for i in 0..8isize {
                assert!((a.get(i, j) - b.get(i - 1, j)).abs() <= 1e-14);
            }
        }
    }

    #[test]
    fn field_arithmetic() {
        let mesh = Mesh::<f64>::new(3, 3).unwrap();
        let a = GridField::from_fn(mesh, |i, j| (i + j) as f64);
        let b = GridField::constant(mesh, 2.0);
        assert_eq!((&a * &b).at(2, 1), 6.0);
        assert_eq!((&a - &b).at(0, 0), -2.0);
        assert_eq!((&a + 1.0).at(1, 1), 3.0);
        assert_eq!((-&a).at(2, 2), -4.0);
        assert_eq!(a.axpy(0.5, &b).at(1, 0), 2.0);
        assert_eq!(a.argmin(), (0, 0, 0.0));
    }

    #[test]
    fn works_in_single_precision() {
        let mesh = Mesh::<f32>::new(4, 4).unwrap();
        let f = project_to_cell_averages(|_, _| 3.0f32, mesh);
        assert!(f.values().iter().all(|&v| (v - 3.0).abs() < 1e-6));
    }
}
