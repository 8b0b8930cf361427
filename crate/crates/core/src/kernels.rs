//! Slice-level numeric kernels shared by the tape's forward and backward
//! passes. Every reduction runs in an order fixed by the operand shapes, so
//! results are reproducible from run to run.

use crate::scalar::Scalar;

fn gemm<F: Scalar>(m: usize, k: usize, n: usize, a: (&[F], isize, isize), b: (&[F], isize, isize), c: &mut [F]) {
    assert_eq!(a.0.len(), m * k);
    assert_eq!(b.0.len(), k * n);
    assert_eq!(c.len(), m * n);
    if m == 0 || k == 0 || n == 0 {
        return;
    }
    // SAFETY: the asserted lengths cover every strided index of a dense
    // (row- or column-major) view of the stated shape.
    unsafe { F::gemm(m, k, n, a.0.as_ptr(), (a.1, a.2), b.0.as_ptr(), (b.1, b.2), c.as_mut_ptr(), n as isize) }
}

/// `c += a · b` with `a: m×k`, `b: k×n`, `c: m×n`.
pub(crate) fn gemm_nn<F: Scalar>(m: usize, k: usize, n: usize, a: &[F], b: &[F], c: &mut [F]) {
    gemm(m, k, n, (a, k as isize, 1), (b, n as isize, 1), c);
}

/// `c += aᵀ · b` with `a: k×m`, `b: k×n`, `c: m×n`.
pub(crate) fn gemm_tn<F: Scalar>(m: usize, k: usize, n: usize, a: &[F], b: &[F], c: &mut [F]) {
    gemm(m, k, n, (a, 1, m as isize), (b, n as isize, 1), c);
}

/// `c += a · bᵀ` with `a: m×k`, `b: n×k`, `c: m×n`.
pub(crate) fn gemm_nt<F: Scalar>(m: usize, k: usize, n: usize, a: &[F], b: &[F], c: &mut [F]) {
    gemm(m, k, n, (a, k as isize, 1), (b, 1, k as isize), c);
}

/// Geometry of a 2-D convolution over a `C×H×W` input.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct ConvGeom {
    pub c_in: usize,
    pub h: usize,
    pub w: usize,
    pub k: usize,
    pub stride: usize,
    pub pad: usize,
    pub h_out: usize,
    pub w_out: usize,
}

impl ConvGeom {
    pub fn rows(&self) -> usize {
        self.c_in * self.k * self.k
    }

    pub fn cols(&self) -> usize {
        self.h_out * self.w_out
    }
}

/// Unfolds zero-padded receptive fields into a `(C·k·k) × (H'·W')` matrix.
pub(crate) fn im2col<F: Scalar>(g: &ConvGeom, input: &[F]) -> Vec<F> {
    let cols = g.cols();
    let mut out = vec![F::zero(); g.rows() * cols];
    for ci in 0..g.c_in {
        let plane = &input[ci * g.h * g.w..(ci + 1) * g.h * g.w];
        for ky in 0..g.k {
            for kx in 0..g.k {
                let row = (ci * g.k + ky) * g.k + kx;
                let dst = &mut out[row * cols..(row + 1) * cols];
                for oy in 0..g.h_out {
                    let iy = (oy * g.stride + ky) as isize - g.pad as isize;
                    if iy < 0 || iy >= g.h as isize {
                        continue;
                    }
                    let src_row = &plane[iy as usize * g.w..(iy as usize + 1) * g.w];
                    for ox in 0..g.w_out {
                        let ix = (ox * g.stride + kx) as isize - g.pad as isize;
                        if ix >= 0 && ix < g.w as isize {
                            dst[oy * g.w_out + ox] = src_row[ix as usize];
                        }
                    }
                }
            }
        }
    }
    out
}

/// Adjoint of [`im2col`]: scatters column gradients back onto the input.
pub(crate) fn col2im<F: Scalar>(g: &ConvGeom, cols_grad: &[F], input_grad: &mut [F]) {
    let cols = g.cols();
    for ci in 0..g.c_in {
        let plane = &mut input_grad[ci * g.h * g.w..(ci + 1) * g.h * g.w];
        for ky in 0..g.k {
            for kx in 0..g.k {
                let row = (ci * g.k + ky) * g.k + kx;
                let src = &cols_grad[row * cols..(row + 1) * cols];
                for oy in 0..g.h_out {
                    let iy = (oy * g.stride + ky) as isize - g.pad as isize;
                    if iy < 0 || iy >= g.h as isize {
                        continue;
                    }
                    for ox in 0..g.w_out {
                        let ix = (ox * g.stride + kx) as isize - g.pad as isize;
                        if ix >= 0 && ix < g.w as isize {
                            plane[iy as usize * g.w + ix as usize] += src[oy * g.w_out + ox];
                        }
                    }
                }
            }
        }
    }
}
