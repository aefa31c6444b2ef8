//! In-place linear maps on a flat amplitude vector. Bit `b` of an index is
//! the `b`-th tensor factor; multi-bit matrices use local index bit `j` for
//! `bits[j]`.

use num_complex::Complex64 as C;
use num_traits::Zero;

pub type M2 = [[C; 2]; 2];

pub fn apply_1(v: &mut [C], bit: usize, m: &M2) {
    let stride = 1usize << bit;
    for block in v.chunks_mut(2 * stride) {
        let (lo, hi) = block.split_at_mut(stride);
        for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
            let (x, y) = (*a, *b);
            *a = m[0][0] * x + m[0][1] * y;
            *b = m[1][0] * x + m[1][1] * y;
        }
    }
}

pub fn apply_cnot(v: &mut [C], control: usize, target: usize) {
    let (c, t) = (1usize << control, 1usize << target);
    for i in 0..v.len() {
        if i & c != 0 && i & t == 0 {
            v.swap(i, i | t);
        }
    }
}

/// Dense `2^k x 2^k` row-major matrix on `bits`.
pub fn apply_dense(v: &mut [C], bits: &[usize], m: &[C]) {
    let dim = 1usize << bits.len();
    debug_assert_eq!(m.len(), dim * dim);
    let mask: usize = bits.iter().map(|b| 1usize << b).sum();
    let offsets: Vec<usize> = (0..dim)
        .map(|l| bits.iter().enumerate().filter(|(j, _)| l >> j & 1 == 1).map(|(_, b)| 1usize << b).sum())
        .collect();
    let mut buf = vec![C::zero(); dim];
    for base in (0..v.len()).filter(|i| i & mask == 0) {
        for (slot, off) in buf.iter_mut().zip(&offsets) {
            *slot = v[base + off];
        }
        for (r, off) in offsets.iter().enumerate() {
            let row = &m[r * dim..(r + 1) * dim];
            v[base + off] = row.iter().zip(&buf).map(|(a, b)| a * b).sum();
        }
    }
}

pub fn conj_m2(m: &M2) -> M2 {
    [[m[0][0].conj(), m[0][1].conj()], [m[1][0].conj(), m[1][1].conj()]]
}

/// Row-major product of two square matrices of side `dim`.
pub fn matmul(a: &[C], b: &[C], dim: usize) -> Vec<C> {
    let mut out = vec![C::zero(); dim * dim];
    for i in 0..dim {
        for k in 0..dim {
            let x = a[i * dim + k];
            if x == C::zero() {
                continue;
            }
            for j in 0..dim {
                out[i * dim + j] += x * b[k * dim + j];
            }
        }
    }
    out
}

pub fn adjoint(m: &[C], dim: usize) -> Vec<C> {
    let mut out = vec![C::zero(); dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            out[j * dim + i] = m[i * dim + j].conj();
        }
    }
    out
}

/// Embed a single-bit matrix acting on local bit `j` of a `k`-bit block.
pub fn embed_1(m: &M2, j: usize, k: usize) -> Vec<C> {
    let dim = 1usize << k;
    let mut out = vec![C::zero(); dim * dim];
    for r in 0..dim {
        for c in 0..dim {
            if (r ^ c) & !(1 << j) == 0 {
                out[r * dim + c] = m[r >> j & 1][c >> j & 1];
            }
        }
    }
    out
}
