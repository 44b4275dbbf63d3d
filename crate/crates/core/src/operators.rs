//! Periodic finite-difference operators and the discrete integral.
//!
//! All operators return fresh fields. On the torus the forward and backward
//! differences are negative adjoints of each other, which is what every
//! conservation and dissipation argument in the scheme rests on.

use crate::error::{NskError, Result};
use crate::mesh::GridField;
use crate::real::{compensated_sum, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    pub fn other(self) -> Axis {
        match self {
            Axis::X => Axis::Y,
            Axis::Y => Axis::X,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DiffKind {
    Forward,
    Backward,
    Central,
}

// Applies `op(prev, cur, next)` along one axis with periodic wrap.
fn along<T: Real>(f: &GridField<T>, axis: Axis, op: impl Fn(T, T, T) -> T) -> GridField<T> {
    let mesh = *f.mesh();
    let (m, n) = (mesh.m(), mesh.n());
    let v = f.values();
    let mut out = Vec::with_capacity(v.len());
    match axis {
        Axis::X => {
            for j in 0..n {
                let row = &v[j * m..(j + 1) * m];
                for i in 0..m {
                    let prev = row[if i == 0 { m - 1 } else { i - 1 }];
                    let next = row[if i + 1 == m { 0 } else { i + 1 }];
                    out.push(op(prev, row[i], next));
                }
            }
        }
        Axis::Y => {
            for j in 0..n {
                let jp = if j == 0 { n - 1 } else { j - 1 };
                let jn = if j + 1 == n { 0 } else { j + 1 };
                for i in 0..m {
                    out.push(op(v[i + m * jp], v[i + m * j], v[i + m * jn]));
                }
            }
        }
    }
    GridField::new(mesh, out).expect("length preserved")
}

/// Periodic first difference of `f` along `axis`.
pub fn diff<T: Real>(f: &GridField<T>, axis: Axis, kind: DiffKind) -> GridField<T> {
    let h = spacing(f, axis);
    match kind {
        DiffKind::Forward => {
            let inv = T::one() / h;
            along(f, axis, |_, c, n| (n - c) * inv)
        }
        DiffKind::Backward => {
            let inv = T::one() / h;
            along(f, axis, |p, c, _| (c - p) * inv)
        }
        DiffKind::Central => {
            let inv = T::one() / (T::lit(2.0) * h);
            along(f, axis, |p, _, n| (n - p) * inv)
        }
    }
}

#[inline]
fn spacing<T: Real>(f: &GridField<T>, axis: Axis) -> T {
    match axis {
        Axis::X => f.mesh().hx(),
        Axis::Y => f.mesh().hy(),
    }
}

/// `g(i, j) = f(i + offset, j)` for `X`, `f(i, j + offset)` for `Y`.
pub fn shift<T: Real>(f: &GridField<T>, axis: Axis, offset: isize) -> Result<GridField<T>> {
    if offset.abs() > 2 {
        return Err(NskError::ShiftOutOfRange(offset));
    }
    Ok(shifted(f, axis, offset))
}

pub(crate) fn shifted<T: Real>(f: &GridField<T>, axis: Axis, offset: isize) -> GridField<T> {
    let mesh = *f.mesh();
    GridField::from_fn(mesh, |i, j| {
        let (i, j) = (i as isize, j as isize);
        match axis {
            Axis::X => f.get(i + offset, j),
            Axis::Y => f.get(i, j + offset),
        }
    })
}

/// One-dimensional second difference `(f+ - 2f + f-) / h^2`.
pub fn second_difference<T: Real>(f: &GridField<T>, axis: Axis) -> GridField<T> {
    let h = spacing(f, axis);
    let inv = T::one() / (h * h);
    let two = T::lit(2.0);
    along(f, axis, |p, c, n| (n - two * c + p) * inv)
}

/// Five-point Laplacian.
pub fn laplacian<T: Real>(f: &GridField<T>) -> GridField<T> {
    let mesh = *f.mesh();
    let (m, n) = (mesh.m(), mesh.n());
    let ix = T::one() / (mesh.hx() * mesh.hx());
    let iy = T::one() / (mesh.hy() * mesh.hy());
    let two = T::lit(2.0);
    GridField::from_fn(mesh, |i, j| {
        let c = f.at(i, j);
        let e = f.at((i + 1) % m, j);
        let w = f.at((i + m - 1) % m, j);
        let nn = f.at(i, (j + 1) % n);
        let s = f.at(i, (j + n - 1) % n);
        (e - two * c + w) * ix + (nn - two * c + s) * iy
    })
}

/// Integral of the piecewise-constant function over the unit torus.
pub fn integral<T: Real>(f: &GridField<T>) -> T {
    let cells = T::lit(f.mesh().len() as f64);
    compensated_sum(f.values().iter().copied()) / cells
}

/// Discrete `L2` pairing.
pub fn inner_product<T: Real>(f: &GridField<T>, g: &GridField<T>) -> Result<T> {
    f.mesh().check_same(g.mesh())?;
    let cells = T::lit(f.mesh().len() as f64);
    Ok(compensated_sum(f.values().iter().zip(g.values()).map(|(&a, &b)| a * b)) / cells)
}

/// Squared discrete `L2` norm.
pub fn norm_sq<T: Real>(f: &GridField<T>) -> T {
    let cells = T::lit(f.mesh().len() as f64);
    compensated_sum(f.values().iter().map(|&a| a * a)) / cells
}

pub fn l1_norm<T: Real>(f: &GridField<T>) -> T {
    let cells = T::lit(f.mesh().len() as f64);
    compensated_sum(f.values().iter().map(|&a| a.abs())) / cells
}

#[inline]
pub(crate) fn dxf<T: Real>(f: &GridField<T>) -> GridField<T> {
    diff(f, Axis::X, DiffKind::Forward)
}
#[inline]
pub(crate) fn dxb<T: Real>(f: &GridField<T>) -> GridField<T> {
    diff(f, Axis::X, DiffKind::Backward)
}
#[inline]
pub(crate) fn dxc<T: Real>(f: &GridField<T>) -> GridField<T> {
    diff(f, Axis::X, DiffKind::Central)
}
#[inline]
pub(crate) fn dyf<T: Real>(f: &GridField<T>) -> GridField<T> {
    diff(f, Axis::Y, DiffKind::Forward)
}
#[inline]
pub(crate) fn dyb<T: Real>(f: &GridField<T>) -> GridField<T> {
    diff(f, Axis::Y, DiffKind::Backward)
}
#[inline]
pub(crate) fn dyc<T: Real>(f: &GridField<T>) -> GridField<T> {
    diff(f, Axis::Y, DiffKind::Central)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Mesh;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    const AXES: [Axis; 2] = [Axis::X, Axis::Y];
    const KINDS: [DiffKind; 3] = [DiffKind::Forward, DiffKind::Backward, DiffKind::Central];

    fn random_field(mesh: Mesh<f64>, rng: &mut ChaCha8Rng) -> GridField<f64> {
        GridField::from_fn(mesh, |_, _| rng.gen_range(-1.0..1.0))
    }

    fn close(a: f64, b: f64, rel: f64, scale: f64) -> bool {
        (a - b).abs() <= rel * (1.0 + scale)
    }

    // Direct quotient oracle with explicit wrap.
    fn naive_diff(f: &GridField<f64>, axis: Axis, kind: DiffKind) -> GridField<f64> {
        let mesh = *f.mesh();
        GridField::from_fn(mesh, |i, j| {
            let (i, j) = (i as isize, j as isize);
            let (di, dj, h) = match axis {
                Axis::X => (1, 0, mesh.hx()),
                Axis::Y => (0, 1, mesh.hy()),
            };
            match kind {
                DiffKind::Forward => (f.get(i + di, j + dj) - f.get(i, j)) / h,
                DiffKind::Backward => (f.get(i, j) - f.get(i - di, j - dj)) / h,
                DiffKind::Central => (f.get(i + di, j + dj) - f.get(i - di, j - dj)) / (2.0 * h),
            }
        })
    }

    #[test]
    fn constants_are_annihilated() {
        let mesh = Mesh::<f64>::new(5, 7).unwrap();
        let c = GridField::constant(mesh, 3.25);
        for a in AXES {
            for k in KINDS {
                assert_eq!(diff(&c, a, k).max_abs(), 0.0);
            }
        }
        assert_eq!(laplacian(&c).max_abs(), 0.0);
    }

    #[test]
    fn central_difference_of_sampled_sine() {
        let mesh = Mesh::<f64>::new(4, 4).unwrap();
        let f = GridField::from_fn(mesh, |i, _| (2.0 * PI * i as f64 * 0.25).sin());
        let d = diff(&f, Axis::X, DiffKind::Central);
        for j in 0..4 {
            for i in 0..4 {
                let want = 4.0 * (2.0 * PI * i as f64 * 0.25).cos();
                assert!((d.at(i, j) - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn differences_match_direct_quotients() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (m, n) in [(4, 4), (8, 8), (8, 16), (5, 3)] {
            let mesh = Mesh::new(m, n).unwrap();
            let f = random_field(mesh, &mut rng);
            for a in AXES {
                for k in KINDS {
                    let fast = diff(&f, a, k);
                    let slow = naive_diff(&f, a, k);
                    let scale = slow.max_abs();
                    for (x, y) in fast.values().iter().zip(slow.values()) {
                        assert!((x - y).abs() <= 1e-14 * scale.max(1.0));
                    }
                }
            }
        }
    }

    #[test]
    fn shift_wraps_indices() {
        let mesh = Mesh::<f64>::new(4, 3).unwrap();
        let f = GridField::from_fn(mesh, |i, _| (i + 1) as f64);
        let g = shift(&f, Axis::X, 1).unwrap();
        for j in 0..3 {
            let row: Vec<f64> = (0..4).map(|i| g.at(i, j)).collect();
            assert_eq!(row, vec![2.0, 3.0, 4.0, 1.0]);
        }
        assert_eq!(shift(&f, Axis::Y, 0).unwrap(), f);
        let mut h = f.clone();
        for _ in 0..4 {
            h = shift(&h, Axis::X, 1).unwrap();
        }
        assert_eq!(h, f);
        assert!(matches!(
            shift(&f, Axis::X, 3),
            Err(NskError::ShiftOutOfRange(3))
        ));
        assert!(shift(&f, Axis::Y, -2).is_ok());
    }

    #[test]
    fn laplacian_eigenvalue_of_sampled_sine() {
        let mesh = Mesh::<f64>::new(4, 4).unwrap();
        let f = GridField::from_fn(mesh, |i, _| (2.0 * PI * i as f64 * 0.25).sin());
        let l = laplacian(&f);
        for (a, b) in l.values().iter().zip(f.values()) {
            assert!((a + 32.0 * b).abs() < 1e-12);
        }
    }

    #[test]
    fn laplacian_is_backward_of_forward() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mesh = Mesh::new(8, 16).unwrap();
        let f = random_field(mesh, &mut rng);
        let composed = dxb(&dxf(&f)) + dyb(&dyf(&f));
        let l = laplacian(&f);
        let scale = l.max_abs();
        for (a, b) in l.values().iter().zip(composed.values()) {
            assert!((a - b).abs() <= 1e-13 * scale);
        }
    }

    #[test]
    fn integral_examples() {
        let mesh = Mesh::<f64>::new(4, 4).unwrap();
        assert!((integral(&GridField::constant(mesh, 2.5)) - 2.5).abs() < 1e-15);
        let s = GridField::from_fn(mesh, |i, _| (2.0 * PI * i as f64 * 0.25).sin());
        assert!(integral(&s).abs() < 1e-15);
        let spike = GridField::from_fn(mesh, |i, j| if (i, j) == (1, 2) { 1.0 } else { 0.0 });
        assert_eq!(integral(&spike), 1.0 / 16.0);
    }

    #[test]
    fn inner_product_examples() {
        let mesh = Mesh::<f64>::new(8, 8).unwrap();
        let one = GridField::constant(mesh, 1.0);
        assert!((inner_product(&one, &one).unwrap() - 1.0).abs() < 1e-15);
        let s = GridField::sample(mesh, |x, _| (2.0 * PI * x).sin());
        let c = GridField::sample(mesh, |x, _| (2.0 * PI * x).cos());
        assert!(inner_product(&s, &c).unwrap().abs() < 1e-15);
        assert!((inner_product(&s, &s).unwrap() - 0.5).abs() < 1e-15);
        let other = GridField::constant(Mesh::new(8, 4).unwrap(), 1.0);
        assert!(matches!(
            inner_product(&one, &other),
            Err(NskError::MeshMismatch(..))
        ));
    }

    #[test]
    fn mixed_differences_commute() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mesh = Mesh::new(6, 9).unwrap();
        let f = random_field(mesh, &mut rng);
        let a = dyf(&dxb(&f));
        let b = dxb(&dyf(&f));
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }

    fn mesh_strategy() -> impl Strategy<Value = (usize, usize)> {
        prop_oneof![Just((4, 4)), Just((8, 8)), Just((8, 16)), Just((3, 5))]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn summation_by_parts((m, n) in mesh_strategy(), seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mesh = Mesh::new(m, n).unwrap();
            let f = random_field(mesh, &mut rng);
            let g = random_field(mesh, &mut rng);
            for a in AXES {
                let df = diff(&f, a, DiffKind::Forward);
                let dg = diff(&g, a, DiffKind::Backward);
                let lhs = inner_product(&df, &g).unwrap();
                let rhs = inner_product(&f, &dg).unwrap();
                prop_assert!(close(lhs, -rhs, 1e-13, lhs.abs()));

                let cf = diff(&f, a, DiffKind::Central);
                let cg = diff(&g, a, DiffKind::Central);
                let lhs = inner_product(&cf, &g).unwrap();
                let rhs = inner_product(&f, &cg).unwrap();
                prop_assert!(close(lhs, -rhs, 1e-13, lhs.abs()));
            }
        }

        #[test]
        fn laplacian_symmetric_and_negative((m, n) in mesh_strategy(), seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mesh = Mesh::new(m, n).unwrap();
            let f = random_field(mesh, &mut rng);
            let g = random_field(mesh, &mut rng);
            let a = inner_product(&laplacian(&f), &g).unwrap();
            let b = inner_product(&f, &laplacian(&g)).unwrap();
            prop_assert!(close(a, b, 1e-13, a.abs()));
            let lf = inner_product(&laplacian(&f), &f).unwrap();
            let grad = norm_sq(&dxf(&f)) + norm_sq(&dyf(&f));
            prop_assert!(close(lf, -grad, 1e-13, grad));
        }

        #[test]
        fn one_sided_from_central((m, n) in mesh_strategy(), seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mesh = Mesh::new(m, n).unwrap();
            let f = random_field(mesh, &mut rng);
            for a in AXES {
                let h = match a { Axis::X => mesh.hx(), Axis::Y => mesh.hy() };
                let fw = diff(&f, a, DiffKind::Forward);
                let bw = diff(&f, a, DiffKind::Backward);
                let c = diff(&f, a, DiffKind::Central);
                let dd = second_difference(&f, a);
                let scale = fw.max_abs().max(bw.max_abs());
                for k in 0..mesh.len() {
                    let (fv, bv, cv, d2) = (fw.values()[k], bw.values()[k], c.values()[k], dd.values()[k]);
                    prop_assert!((cv - 0.5 * (fv + bv)).abs() <= 1e-14 * scale);
                    prop_assert!((fv - cv - 0.5 * h * d2).abs() <= 1e-13 * scale);
                    prop_assert!((bv - cv + 0.5 * h * d2).abs() <= 1e-13 * scale);
                }
            }
        }
    }
}
