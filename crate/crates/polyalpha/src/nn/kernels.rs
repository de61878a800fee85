//! Inner-loop vector kernels.
//!
//! `dot8` accumulates into eight independent lanes combined in a fixed
//! order, so the compiler can vectorize it while the result stays
//! bit-identical across targets that evaluate IEEE arithmetic exactly.

use super::Scalar;

/// Dot product with eight accumulator lanes.
#[inline]
pub fn dot8<S: Scalar>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    let split = a.len() - a.len() % 8;
    let mut acc = [S::zero(); 8];
    for (ca, cb) in a[..split].chunks_exact(8).zip(b[..split].chunks_exact(8)) {
        for l in 0..8 {
            acc[l] = acc[l] + ca[l] * cb[l];
        }
    }
    let mut tail = S::zero();
    for (&x, &y) in a[split..].iter().zip(&b[split..]) {
        tail = tail + x * y;
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail
}

/// `y += alpha * x`, elementwise.
#[inline]
pub fn axpy<S: Scalar>(alpha: S, x: &[S], y: &mut [S]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = *yi + alpha * xi;
    }
}
