//! Fixed-size vector helpers on plain arrays.

use crate::scalar::Real;

pub type P2<T> = [T; 2];
pub type V3<T> = [T; 3];

#[inline]
pub fn add3<T: Real>(a: V3<T>, b: V3<T>) -> V3<T> {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub3<T: Real>(a: V3<T>, b: V3<T>) -> V3<T> {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn scale3<T: Real>(s: T, a: V3<T>) -> V3<T> {
    [s * a[0], s * a[1], s * a[2]]
}

#[inline]
pub fn dot3<T: Real>(a: V3<T>, b: V3<T>) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross3<T: Real>(a: V3<T>, b: V3<T>) -> V3<T> {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm3<T: Real>(a: V3<T>) -> T {
    dot3(a, a).sqrt()
}

#[inline]
pub fn sub2<T: Real>(a: P2<T>, b: P2<T>) -> P2<T> {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn dot2<T: Real>(a: P2<T>, b: P2<T>) -> T {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn norm2<T: Real>(a: P2<T>) -> T {
    dot2(a, a).sqrt()
}

#[inline]
pub fn cross2<T: Real>(a: P2<T>, b: P2<T>) -> T {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
pub fn midpoint2<T: Real>(a: P2<T>, b: P2<T>) -> P2<T> {
    let h = T::lit(0.5);
    [h * (a[0] + b[0]), h * (a[1] + b[1])]
}

/// Euclidean distance from `p` to the closed segment `[a, b]`.
pub fn point_segment_distance<T: Real>(p: P2<T>, a: P2<T>, b: P2<T>) -> T {
    let ab = sub2(b, a);
    let ap = sub2(p, a);
    let len2 = dot2(ab, ab);
    let s = if len2 > T::zero() {
        (dot2(ap, ab) / len2).max(T::zero()).min(T::one())
    } else {
        T::zero()
    };
    let q = [a[0] + s * ab[0] - p[0], a[1] + s * ab[1] - p[1]];
    norm2(q)
}

/// Euclidean distance from `p` to the closed triangle with corners `c`.
pub fn point_triangle_distance<T: Real>(p: P2<T>, c: &[P2<T>; 3]) -> T {
    let orient = cross2(sub2(c[1], c[0]), sub2(c[2], c[0]));
    let sgn = if orient >= T::zero() { T::one() } else { -T::one() };
    let inside = (0..3).all(|i| {
        let a = c[i];
        let b = c[(i + 1) % 3];
        sgn * cross2(sub2(b, a), sub2(p, a)) >= T::zero()
    });
    if inside {
        return T::zero();
    }
    (0..3)
        .map(|i| point_segment_distance(p, c[i], c[(i + 1) % 3]))
        .fold(T::infinity(), T::min)
}

/// Solves the dense system `a x = b` in place by Gaussian elimination with partial pivoting.
/// Returns `None` for a numerically singular matrix.
pub fn dense_solve<T: Real>(a: &mut [Vec<T>], b: &mut [T]) -> Option<()> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[piv][col].abs() <= T::epsilon() * T::lit(1e-3) {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != T::zero() {
                for k in col..n {
                    let v = a[col][k];
                    a[row][k] -= f * v;
                }
                let v = b[col];
                b[row] -= f * v;
            }
        }
    }
    for row in (0..n).rev() {
        let mut s = b[row];
        for k in row + 1..n {
            s -= a[row][k] * b[k];
        }
        b[row] = s / a[row][row];
    }
    Some(())
}
